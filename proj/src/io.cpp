#include "bonsai/io.hpp"

#include <png.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "bonsai/error.hpp"

namespace bonsai::io {

namespace {

std::string fmt(double v) { return format_number(v); }

double parse_double(std::string_view token, const char* what) {
    // std::from_chars for double is unavailable on older toolchains; strtod
    // on a bounded copy is equivalent here.
    const std::string copy(token);
    char* end = nullptr;
    const double v = std::strtod(copy.c_str(), &end);
    if (copy.empty() || end != copy.c_str() + copy.size()) {
        throw ParseError(std::string("invalid number '") + copy + "' in " + what);
    }
    return v;
}

long long parse_int(std::string_view token, const char* what) {
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc{} || ptr != token.data() + token.size()) {
        throw ParseError(std::string("invalid integer '") + std::string(token) + "' in " + what);
    }
    return v;
}

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) {
            ++i;
        }
        const std::size_t start = i;
        while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) {
            ++i;
        }
        if (i > start) {
            out.push_back(line.substr(start, i - start));
        }
    }
    return out;
}

class LineReader {
public:
    explicit LineReader(std::string_view text) : text_(text) {}

    bool next(std::string_view& line) {
        if (pos_ >= text_.size()) {
            return false;
        }
        const std::size_t nl = text_.find('\n', pos_);
        const std::size_t end = nl == std::string_view::npos ? text_.size() : nl;
        line = text_.substr(pos_, end - pos_);
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        pos_ = end + 1;
        return true;
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
};

// Minimal ASCII PLY reader: one vertex element, scalar properties.
struct PlyTable {
    std::map<std::string, std::size_t> column;
    std::vector<std::vector<double>> rows;

    std::size_t require(const std::string& name) const {
        const auto it = column.find(name);
        if (it == column.end()) {
            throw ParseError("PLY is missing vertex property '" + name + "'");
        }
        return it->second;
    }
};

PlyTable read_ply(std::string_view text) {
    LineReader reader(text);
    std::string_view line;
    if (!reader.next(line) || line != "ply") {
        throw ParseError("not a PLY file");
    }
    PlyTable table;
    long long count = -1;
    bool in_vertex = false;
    bool ended = false;
    while (reader.next(line)) {
        const auto tok = split_ws(line);
        if (tok.empty() || tok[0] == "comment") {
            continue;
        }
        if (tok[0] == "format") {
            if (tok.size() < 2 || tok[1] != "ascii") {
                throw ParseError("only ascii PLY is supported");
            }
        } else if (tok[0] == "element") {
            if (tok.size() != 3) {
                throw ParseError("malformed PLY element line");
            }
            in_vertex = tok[1] == "vertex";
            if (in_vertex) {
                count = parse_int(tok[2], "PLY header");
            } else if (parse_int(tok[2], "PLY header") != 0) {
                throw ParseError("unsupported PLY element '" + std::string(tok[1]) + "'");
            }
        } else if (tok[0] == "property") {
            if (tok.size() != 3) {
                throw ParseError("only scalar PLY properties are supported");
            }
            if (in_vertex) {
                const std::size_t idx = table.column.size();
                table.column.emplace(std::string(tok[2]), idx);
            }
        } else if (tok[0] == "end_header") {
            ended = true;
            break;
        } else {
            throw ParseError("unexpected PLY header line '" + std::string(line) + "'");
        }
    }
    if (!ended || count < 0) {
        throw ParseError("PLY header without vertex element or end_header");
    }
    table.rows.reserve(static_cast<std::size_t>(count));
    for (long long i = 0; i < count; ++i) {
        if (!reader.next(line)) {
            throw ParseError("PLY ends before all vertices were read");
        }
        const auto tok = split_ws(line);
        if (tok.size() != table.column.size()) {
            throw ParseError("PLY vertex line has the wrong number of values");
        }
        std::vector<double> row;
        row.reserve(tok.size());
        for (const auto t : tok) {
            row.push_back(parse_double(t, "PLY vertex"));
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

std::string ply_header(std::size_t count, std::initializer_list<const char*> props) {
    std::ostringstream out;
    out << "ply\nformat ascii 1.0\nelement vertex " << count << '\n';
    for (const char* p : props) {
        out << "property " << (std::strcmp(p, "label") == 0 ? "uchar " : "float ") << p << '\n';
    }
    out << "end_header\n";
    return out.str();
}

void append_f32_le(std::string& out, float v) {
    std::uint32_t bits = 0;
    std::memcpy(&bits, &v, sizeof bits);
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
    }
}

float read_f32_le(const unsigned char* p) {
    const std::uint32_t bits = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                               (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
    float v = 0.0f;
    std::memcpy(&v, &bits, sizeof v);
    return v;
}

// Reads whitespace-separated header tokens of a Netpbm-style file, skipping
// '#' comments. Leaves `pos` just past the single whitespace after the last token.
std::vector<std::string> netpbm_header(std::string_view bytes, std::size_t tokens, std::size_t& pos) {
    std::vector<std::string> out;
    pos = 0;
    while (out.size() < tokens) {
        while (pos < bytes.size() && (std::isspace(static_cast<unsigned char>(bytes[pos])) || bytes[pos] == '#')) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') {
                    ++pos;
                }
            } else {
                ++pos;
            }
        }
        const std::size_t start = pos;
        while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
            ++pos;
        }
        if (pos == start) {
            throw ParseError("truncated image header");
        }
        out.emplace_back(bytes.substr(start, pos - start));
    }
    if (pos >= bytes.size()) {
        throw ParseError("image has no pixel data");
    }
    ++pos;
    return out;
}

BinaryMask mask_from_pgm(std::string_view bytes) {
    std::size_t pos = 0;
    const auto header = netpbm_header(bytes, 4, pos);
    const bool binary = header[0] == "P5";
    if (!binary && header[0] != "P2") {
        throw ParseError("unsupported PGM magic '" + header[0] + "'");
    }
    const long long w = parse_int(header[1], "PGM header");
    const long long h = parse_int(header[2], "PGM header");
    const long long maxval = parse_int(header[3], "PGM header");
    if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535 || w > (1 << 20) || h > (1 << 20)) {
        throw ParseError("invalid PGM dimensions");
    }
    const auto threshold = static_cast<long long>(maxval / 2);
    BinaryMask mask(static_cast<std::size_t>(w), static_cast<std::size_t>(h));
    const std::size_t n = mask.pixels.size();
    if (binary) {
        const std::size_t bps = maxval > 255 ? 2 : 1;
        if (bytes.size() - pos < n * bps) {
            throw ParseError("PGM pixel data is truncated");
        }
        const auto* data = reinterpret_cast<const unsigned char*>(bytes.data() + pos);
        for (std::size_t i = 0; i < n; ++i) {
            const long long v = bps == 2 ? (data[2 * i] << 8) | data[2 * i + 1] : data[i];
            mask.pixels[i] = v > threshold ? 1 : 0;
        }
    } else {
        const auto tok = split_ws(bytes.substr(pos));
        if (tok.size() < n) {
            throw ParseError("PGM pixel data is truncated");
        }
        for (std::size_t i = 0; i < n; ++i) {
            mask.pixels[i] = parse_int(tok[i], "PGM pixels") > threshold ? 1 : 0;
        }
    }
    return mask;
}

BinaryMask mask_from_png(std::string_view bytes) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
        throw ParseError(std::string("PNG: ") + image.message);
    }
    image.format = PNG_FORMAT_GRAY;
    std::vector<unsigned char> buffer(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
        const std::string msg = image.message;
        png_image_free(&image);
        throw ParseError("PNG: " + msg);
    }
    BinaryMask mask(image.width, image.height);
    for (std::size_t i = 0; i < mask.pixels.size(); ++i) {
        mask.pixels[i] = buffer[i] > 127 ? 1 : 0;
    }
    return mask;
}

}  // namespace

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path.string() + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) {
        throw IoError("failed reading '" + path.string() + "'");
    }
    return buf.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write '" + path.string() + "'");
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw IoError("failed writing '" + path.string() + "'");
    }
}

std::string mesh_to_obj(const TubeMesh& mesh) {
    std::ostringstream out;
    out << "# bonsai tube mesh\n# vertices " << mesh.vertices.size() << " faces " << mesh.faces.size() << '\n';
    for (const Vec3& v : mesh.vertices) {
        out << "v " << fmt(v.x) << ' ' << fmt(v.y) << ' ' << fmt(v.z) << '\n';
    }
    for (const Face& f : mesh.faces) {
        out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
    }
    return out.str();
}

TubeMesh mesh_from_obj(std::string_view text) {
    TubeMesh mesh;
    LineReader reader(text);
    std::string_view line;
    while (reader.next(line)) {
        const auto tok = split_ws(line);
        if (tok.empty() || tok[0][0] == '#') {
            continue;
        }
        if (tok[0] == "v") {
            if (tok.size() < 4) {
                throw ParseError("OBJ vertex needs three coordinates");
            }
            mesh.vertices.push_back(
                {parse_double(tok[1], "OBJ"), parse_double(tok[2], "OBJ"), parse_double(tok[3], "OBJ")});
        } else if (tok[0] == "f") {
            if (tok.size() != 4) {
                throw ParseError("only triangular OBJ faces are supported");
            }
            Face f{};
            for (int k = 0; k < 3; ++k) {
                // accept v, v/vt, v//vn forms
                const auto slash = tok[k + 1].find('/');
                const long long idx = parse_int(tok[k + 1].substr(0, slash), "OBJ face");
                if (idx < 1 || static_cast<std::size_t>(idx) > mesh.vertices.size()) {
                    throw ParseError("OBJ face index out of range");
                }
                f[k] = static_cast<std::uint32_t>(idx - 1);
            }
            mesh.faces.push_back(f);
        }
    }
    return mesh;
}

std::string cloud_to_ply(const SurfaceCloud& cloud) {
    std::string out = ply_header(cloud.size(), {"x", "y", "z", "nx", "ny", "nz", "label"});
    std::ostringstream body;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const Vec3& p = cloud.points[i];
        const Vec3& n = cloud.normals[i];
        body << fmt(p.x) << ' ' << fmt(p.y) << ' ' << fmt(p.z) << ' ' << fmt(n.x) << ' ' << fmt(n.y) << ' '
             << fmt(n.z) << ' ' << static_cast<int>(cloud.labels[i]) << '\n';
    }
    return out + body.str();
}

SurfaceCloud cloud_from_ply(std::string_view text) {
    const PlyTable t = read_ply(text);
    const std::size_t x = t.require("x"), y = t.require("y"), z = t.require("z");
    const std::size_t nx = t.require("nx"), ny = t.require("ny"), nz = t.require("nz");
    const std::size_t label = t.require("label");
    SurfaceCloud cloud;
    for (const auto& row : t.rows) {
        cloud.points.push_back({row[x], row[y], row[z]});
        cloud.normals.push_back({row[nx], row[ny], row[nz]});
        cloud.source_face.push_back(0);
        if (row[label] != 0.0 && row[label] != 1.0) {
            throw ParseError("cloud label must be 0 (trunk) or 1 (extremity)");
        }
        cloud.labels.push_back(row[label] == 1.0 ? SurfaceLabel::extremity : SurfaceLabel::trunk);
    }
    return cloud;
}

std::string gaussians_to_ply(const GaussianCloud& cloud) {
    std::string out = ply_header(cloud.size(), {"x", "y", "z", "sigma", "r", "g", "b", "opacity"});
    std::ostringstream body;
    for (const Splat& s : cloud.splats) {
        body << fmt(s.mu.x) << ' ' << fmt(s.mu.y) << ' ' << fmt(s.mu.z) << ' ' << fmt(std::sqrt(s.cov(0, 0)))
             << ' ' << fmt(s.color.r) << ' ' << fmt(s.color.g) << ' ' << fmt(s.color.b) << ' ' << fmt(s.opacity)
             << '\n';
    }
    return out + body.str();
}

GaussianCloud gaussians_from_ply(std::string_view text) {
    const PlyTable t = read_ply(text);
    const std::size_t x = t.require("x"), y = t.require("y"), z = t.require("z");
    const std::size_t sigma = t.require("sigma");
    const std::size_t r = t.require("r"), g = t.require("g"), b = t.require("b");
    const std::size_t opacity = t.require("opacity");
    GaussianCloud cloud;
    for (const auto& row : t.rows) {
        if (!(row[sigma] > 0.0) || !(row[opacity] > 0.0 && row[opacity] <= 1.0)) {
            throw ParseError("gaussian PLY needs sigma > 0 and opacity in (0, 1]");
        }
        Splat s;
        s.mu = {row[x], row[y], row[z]};
        s.cov = Mat3::scaled_identity(row[sigma] * row[sigma]);
        s.color = {row[r], row[g], row[b]};
        s.opacity = row[opacity];
        cloud.splats.push_back(s);
    }
    return cloud;
}

std::string depth_to_pfm(const DepthImage& depth) {
    std::string out = "Pf\n" + std::to_string(depth.width) + ' ' + std::to_string(depth.height) + "\n-1.0\n";
    out.reserve(out.size() + 4 * depth.depth.size());
    for (std::size_t row = depth.height; row-- > 0;) {
        for (std::size_t x = 0; x < depth.width; ++x) {
            append_f32_le(out, static_cast<float>(depth.at(x, row)));
        }
    }
    return out;
}

DepthImage depth_from_pfm(std::string_view bytes) {
    std::size_t pos = 0;
    const auto header = netpbm_header(bytes, 4, pos);
    if (header[0] != "Pf") {
        throw ParseError("only single-channel PFM is supported");
    }
    const long long w = parse_int(header[1], "PFM header");
    const long long h = parse_int(header[2], "PFM header");
    const double scale = parse_double(header[3], "PFM header");
    if (w <= 0 || h <= 0 || scale >= 0.0) {
        throw ParseError("expected a little-endian PFM with positive size");
    }
    DepthImage img(static_cast<std::size_t>(w), static_cast<std::size_t>(h));
    if (bytes.size() - pos < 4 * img.depth.size()) {
        throw ParseError("PFM pixel data is truncated");
    }
    const auto* data = reinterpret_cast<const unsigned char*>(bytes.data() + pos);
    for (std::size_t row = 0; row < img.height; ++row) {
        for (std::size_t x = 0; x < img.width; ++x) {
            const std::size_t src = (img.height - 1 - row) * img.width + x;
            img.depth[row * img.width + x] = read_f32_le(data + 4 * src);
        }
    }
    return img;
}

std::string depth_to_pgm16(const DepthImage& depth) {
    double lo = HUGE_VAL;
    double hi = -HUGE_VAL;
    for (const double d : depth.depth) {
        if (std::isfinite(d)) {
            lo = std::fmin(lo, d);
            hi = std::fmax(hi, d);
        }
    }
    std::string out = "P5\n" + std::to_string(depth.width) + ' ' + std::to_string(depth.height) + "\n65535\n";
    out.reserve(out.size() + 2 * depth.depth.size());
    for (const double d : depth.depth) {
        std::uint16_t v = 0;
        if (std::isfinite(d)) {
            const double t = hi > lo ? (hi - d) / (hi - lo) : 1.0;
            v = static_cast<std::uint16_t>(1 + std::lround(t * 65534.0));
        }
        out.push_back(static_cast<char>(v >> 8));
        out.push_back(static_cast<char>(v & 0xff));
    }
    return out;
}

std::string color_to_ppm(const ColorImage& color) {
    std::string out = "P6\n" + std::to_string(color.width) + ' ' + std::to_string(color.height) + "\n255\n";
    out.reserve(out.size() + 3 * color.pixels.size());
    auto to8 = [](double c) {
        return static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(c, 0.0, 1.0) * 255.0)));
    };
    for (const Rgb& p : color.pixels) {
        out.push_back(to8(p.r));
        out.push_back(to8(p.g));
        out.push_back(to8(p.b));
    }
    return out;
}

std::string mask_to_pgm(const BinaryMask& mask) {
    std::string out = "P5\n" + std::to_string(mask.width) + ' ' + std::to_string(mask.height) + "\n255\n";
    for (const auto p : mask.pixels) {
        out.push_back(static_cast<char>(p ? 255 : 0));
    }
    return out;
}

BinaryMask mask_from_bytes(std::string_view bytes) {
    static constexpr unsigned char kPngSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPngSig, 8) == 0) {
        return mask_from_png(bytes);
    }
    if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '2')) {
        return mask_from_pgm(bytes);
    }
    throw ParseError("mask is neither PNG nor PGM");
}

}  // namespace bonsai::io
