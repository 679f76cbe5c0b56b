#include "bonsai/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <optional>

#include "bonsai/colonization.hpp"
#include "bonsai/config.hpp"
#include "bonsai/error.hpp"
#include "bonsai/fit.hpp"
#include "bonsai/gaussian.hpp"
#include "bonsai/io.hpp"
#include "bonsai/render.hpp"
#include "bonsai/solid.hpp"

namespace bonsai::cli {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kDefaultSeed = 42;

std::string fmt(double v) { return format_number(v); }

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
        throw IoError("cannot create output directory '" + dir.string() + "'");
    }
}

void ensure_parent(const fs::path& file) {
    if (file.has_parent_path()) {
        ensure_dir(file.parent_path());
    }
}

PipelineConfig config_or_default(const std::string& path) {
    return path.empty() ? PipelineConfig{} : load_config(path);
}

Skeleton load_skeleton(const std::string& path, bool auto_size, const SizingParams& sizing) {
    Skeleton skel = deserialize_skeleton(io::read_file(path));
    if (auto_size) {
        skel = compute_sizes(skel, sizing);
    } else if (!skel.is_sized()) {
        throw UnsizedSkeleton("skeleton has nodes without a positive size; rerun with --auto-size");
    }
    return skel;
}

// Shared sizing overrides for mesh and sample.
struct SizingFlags {
    std::string config;
    bool auto_size = false;
    std::optional<double> extremity_size;
    std::optional<double> inverted_growth;
    std::optional<std::size_t> segments;

    void attach(CLI::App* app) {
        app->add_option("--config", config, "config file for [sizing] values");
        app->add_flag("--auto-size", auto_size, "size branches with the inverted growth model first");
        app->add_option("--extremity-size", extremity_size, "override sizing.extremity_size");
        app->add_option("--inverted-growth", inverted_growth, "override sizing.inverted_growth");
        app->add_option("--segments", segments, "override sizing.ring_segments");
    }

    SizingParams resolve(const PipelineConfig& cfg) const {
        SizingParams sp = cfg.sizing;
        if (extremity_size) {
            sp.extremity_size = *extremity_size;
        }
        if (inverted_growth) {
            sp.inverted_growth = *inverted_growth;
        }
        if (segments) {
            sp.ring_segments = *segments;
        }
        validate_sizing(sp);
        return sp;
    }
};

struct GrowOutputs {
    GrowthResult result;
    std::string skeleton_json;
};

GrowOutputs grow_and_write(const GrowthParams& params, const fs::path& dir, std::ostream& out) {
    ensure_dir(dir);
    GrowOutputs g{generate(params), {}};
    g.skeleton_json = serialize_skeleton(g.result.skeleton);
    io::write_file(dir / "skeleton.json", g.skeleton_json);
    io::write_file(dir / "growth_trace.csv", g.result.trace.to_csv());
    io::write_file(dir / "attractors.ply", attractors_to_ply(g.result.field));
    const auto& skel = g.result.skeleton;
    const std::size_t total = g.result.field.size();
    const std::size_t alive = g.result.field.alive_count();
    out << "nodes " << skel.size() << " (branches " << skel.branch_count() << ", extremities "
        << skel.extremity_count() << ")\n"
        << "attractors " << total << " (killed " << total - alive << ", alive " << alive << ")\n"
        << "iterations " << g.result.trace.records.size() << '\n';
    return g;
}

enum class DepthFormat { pfm, pgm, both };

void write_views(const std::vector<RenderedView>& views, const fs::path& dir, DepthFormat depth_format,
                 bool masks) {
    ensure_dir(dir);
    for (std::size_t i = 0; i < views.size(); ++i) {
        const std::string stem = "view" + std::to_string(i) + "_";
        io::write_file(dir / (stem + "color.ppm"), io::color_to_ppm(views[i].color));
        if (depth_format != DepthFormat::pgm) {
            io::write_file(dir / (stem + "depth.pfm"), io::depth_to_pfm(views[i].depth));
        }
        if (depth_format != DepthFormat::pfm) {
            io::write_file(dir / (stem + "depth.pgm"), io::depth_to_pgm16(views[i].depth));
        }
        if (masks) {
            io::write_file(dir / (stem + "mask.pgm"), io::mask_to_pgm(mask_from_depth(views[i].depth)));
        }
    }
}

std::vector<Camera> rig_for(const Aabb& box, const RigSettings& rig, std::uint64_t seed) {
    Vec3 center{0.0, 0.0, 0.0};
    double radius = 1.0;
    if (!box.empty()) {
        center = box.center();
        radius = box.half_diagonal() > 0.0 ? box.half_diagonal() : 1.0;
    }
    Rng rng = substream(seed, "cameras");
    return default_camera_rig(center, radius, rig, rng);
}

std::vector<SilhouetteStats> load_mask_stats(const fs::path& dir, std::ostream& err) {
    if (!fs::is_directory(dir)) {
        throw IoError("mask directory '" + dir.string() + "' does not exist");
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file()) {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    std::vector<SilhouetteStats> stats;
    for (const auto& f : files) {
        try {
            stats.push_back(stats_from_mask(io::mask_from_bytes(io::read_file(f))));
        } catch (const Error& e) {
            err << "warning: skipping mask '" << f.filename().string() << "': " << e.what() << '\n';
        }
    }
    if (stats.empty()) {
        throw ValidationError("no valid masks found in '" + dir.string() + "'");
    }
    return stats;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Procedural bonsai structure generator: grow, mesh, sample, splat, render and fit.", "bonsai"};
    app.require_subcommand(1);
    app.footer("Environment: BONSAI_THREADS caps the worker count (default: all cores).\n"
               "Exit codes: 0 success, 1 I/O failure, 2 invalid input or configuration.\n\n" +
               config_reference());

    // grow
    auto* grow_cmd = app.add_subcommand("grow", "Grow a branch skeleton from a config file");
    std::string grow_config;
    std::optional<std::uint64_t> grow_seed;
    std::string grow_out;
    grow_cmd->add_option("--config", grow_config, "pipeline config file")->required();
    grow_cmd->add_option("--seed", grow_seed, "override the config seed");
    grow_cmd->add_option("--out", grow_out, "output directory (default: output_dir from the config)");

    // mesh
    auto* mesh_cmd = app.add_subcommand("mesh", "Sweep tubes along a skeleton into an OBJ mesh");
    std::string mesh_in;
    std::string mesh_out;
    SizingFlags mesh_sizing;
    mesh_cmd->add_option("--in", mesh_in, "skeleton JSON")->required();
    mesh_cmd->add_option("--out", mesh_out, "output OBJ")->required();
    mesh_sizing.attach(mesh_cmd);

    // sample
    auto* sample_cmd = app.add_subcommand("sample", "Sample a labelled surface point cloud from a skeleton's mesh");
    std::string sample_in;
    std::string sample_out;
    SizingFlags sample_sizing;
    std::optional<double> sample_density;
    std::optional<std::size_t> sample_count;
    std::optional<std::uint64_t> sample_seed;
    sample_cmd->add_option("--in", sample_in, "skeleton JSON")->required();
    sample_cmd->add_option("--out", sample_out, "output PLY")->required();
    auto* density_opt = sample_cmd->add_option("--density", sample_density, "points per unit area");
    sample_cmd->add_option("--count", sample_count, "exact number of points")->excludes(density_opt);
    sample_cmd->add_option("--seed", sample_seed, "sampling seed (default: the skeleton's growth seed)");
    sample_sizing.attach(sample_cmd);

    // gaussians
    auto* gauss_cmd = app.add_subcommand("gaussians", "Initialize isotropic gaussians from a point cloud");
    std::string gauss_in;
    std::string gauss_out;
    std::string gauss_config;
    std::optional<double> gauss_opacity;
    gauss_cmd->add_option("--in", gauss_in, "point cloud PLY")->required();
    gauss_cmd->add_option("--out", gauss_out, "output gaussian PLY")->required();
    gauss_cmd->add_option("--config", gauss_config, "config file for [gaussians] values");
    gauss_cmd->add_option("--opacity", gauss_opacity, "override gaussians.opacity");

    // render
    auto* render_cmd = app.add_subcommand("render", "Render color and depth views of gaussians (.ply) or a mesh (.obj)");
    std::string render_in;
    std::string render_out;
    std::string render_config;
    std::optional<std::size_t> render_views;
    std::optional<std::uint64_t> render_seed;
    std::optional<std::size_t> render_width;
    std::optional<std::size_t> render_height;
    std::optional<double> render_fov;
    std::string depth_format = "pfm";
    bool render_masks = false;
    render_cmd->add_option("--in", render_in, "gaussian PLY or mesh OBJ")->required();
    render_cmd->add_option("--out", render_out, "output directory")->required();
    render_cmd->add_option("--config", render_config, "config file for [render] values and seed");
    render_cmd->add_option("--views", render_views, "number of views (default 4)");
    render_cmd->add_option("--seed", render_seed, "camera seed");
    render_cmd->add_option("--width", render_width, "image width");
    render_cmd->add_option("--height", render_height, "image height");
    render_cmd->add_option("--fov", render_fov, "vertical field of view in degrees");
    render_cmd->add_option("--depth-format", depth_format, "pfm, pgm (16-bit, 0 = background) or both")
        ->check(CLI::IsMember({"pfm", "pgm", "both"}));
    render_cmd->add_flag("--masks", render_masks, "also write binary silhouette masks");

    // fit
    auto* fit_cmd = app.add_subcommand("fit", "Fit growth weights to silhouette masks");
    std::string fit_masks;
    std::string fit_config;
    std::string fit_out;
    std::optional<std::size_t> fit_budget;
    std::optional<std::uint64_t> fit_seed;
    fit_cmd->add_option("--masks", fit_masks, "directory of PNG/PGM masks (> 127 is foreground)")->required();
    fit_cmd->add_option("--config", fit_config, "pipeline config file")->required();
    fit_cmd->add_option("--budget", fit_budget, "override fit.budget");
    fit_cmd->add_option("--seed", fit_seed, "override fit.seed");
    fit_cmd->add_option("--out", fit_out, "output directory")->required();

    // pipeline
    auto* pipe_cmd = app.add_subcommand("pipeline", "grow, mesh, sample, gaussians and render in one run");
    std::string pipe_config;
    std::string pipe_out;
    std::optional<std::uint64_t> pipe_seed;
    pipe_cmd->add_option("--config", pipe_config, "pipeline config file")->required();
    pipe_cmd->add_option("--out", pipe_out, "output directory (default: output_dir from the config)");
    pipe_cmd->add_option("--seed", pipe_seed, "override the config seed");

    std::vector<std::string> argv_storage{"bonsai"};
    argv_storage.insert(argv_storage.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& a : argv_storage) {
        argv.push_back(a.c_str());
    }

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kInvalid;
    }

    try {
        if (grow_cmd->parsed()) {
            PipelineConfig cfg = load_config(grow_config);
            if (grow_seed) {
                cfg.growth.seed = *grow_seed;
            }
            grow_and_write(cfg.growth, grow_out.empty() ? cfg.output_dir : grow_out, out);
        } else if (mesh_cmd->parsed()) {
            const SizingParams sp = mesh_sizing.resolve(config_or_default(mesh_sizing.config));
            const Skeleton skel = load_skeleton(mesh_in, mesh_sizing.auto_size, sp);
            const TubeMesh mesh = build_mesh(skel, sp);
            ensure_parent(mesh_out);
            io::write_file(mesh_out, io::mesh_to_obj(mesh));
            out << "vertices " << mesh.vertices.size() << "\nfaces " << mesh.faces.size() << '\n';
        } else if (sample_cmd->parsed()) {
            const PipelineConfig cfg = config_or_default(sample_sizing.config);
            const SizingParams sp = sample_sizing.resolve(cfg);
            const Skeleton skel = load_skeleton(sample_in, sample_sizing.auto_size, sp);
            const TubeMesh mesh = build_mesh(skel, sp);
            Rng rng = substream(sample_seed.value_or(skel.params_used().seed), "sampling");
            const SurfaceCloud cloud = sample_count ? sample_surface_count(mesh, *sample_count, rng)
                                                    : sample_surface(mesh, sample_density.value_or(cfg.density), rng);
            ensure_parent(sample_out);
            io::write_file(sample_out, io::cloud_to_ply(cloud));
            const auto extremity =
                std::count(cloud.labels.begin(), cloud.labels.end(), SurfaceLabel::extremity);
            out << "points " << cloud.size() << " (extremity " << extremity << ")\n"
                << "surface area " << fmt(mesh.total_area()) << '\n';
        } else if (gauss_cmd->parsed()) {
            const PipelineConfig cfg = config_or_default(gauss_config);
            const SurfaceCloud cloud = io::cloud_from_ply(io::read_file(gauss_in));
            const GaussianCloud g = init_gaussians(cloud, gauss_opacity.value_or(cfg.opacity), cfg.palette);
            ensure_parent(gauss_out);
            io::write_file(gauss_out, io::gaussians_to_ply(g));
            out << "gaussians " << g.size() << '\n';
        } else if (render_cmd->parsed()) {
            const PipelineConfig cfg = config_or_default(render_config);
            RigSettings rig = cfg.rig;
            rig.views = render_views.value_or(rig.views);
            rig.width = render_width.value_or(rig.width);
            rig.height = render_height.value_or(rig.height);
            rig.vertical_fov = render_fov.value_or(rig.vertical_fov);
            const std::uint64_t seed = render_seed.value_or(render_config.empty() ? kDefaultSeed : cfg.growth.seed);
            const DepthFormat df = depth_format == "pgm"    ? DepthFormat::pgm
                                   : depth_format == "both" ? DepthFormat::both
                                                            : DepthFormat::pfm;
            std::vector<RenderedView> views;
            if (fs::path(render_in).extension() == ".obj") {
                const TubeMesh mesh = io::mesh_from_obj(io::read_file(render_in));
                Aabb box;
                for (const Vec3& v : mesh.vertices) {
                    box.expand(v);
                }
                views = render_mesh(mesh, rig_for(box, rig, seed));
            } else {
                const GaussianCloud g = io::gaussians_from_ply(io::read_file(render_in));
                views = render_gaussians(g, rig_for(g.bounds(), rig, seed));
            }
            write_views(views, render_out, df, render_masks);
            out << "views " << views.size() << " (" << rig.width << "x" << rig.height << ")\n";
        } else if (fit_cmd->parsed()) {
            const PipelineConfig cfg = load_config(fit_config);
            FitConfig fc = cfg.fit_config();
            if (fit_budget) {
                fc.budget = *fit_budget;
            }
            if (fit_seed) {
                fc.seed = *fit_seed;
            }
            const auto targets = load_mask_stats(fit_masks, err);
            const FitResult result = fit(fc, targets);
            ensure_dir(fit_out);
            io::write_file(fs::path(fit_out) / "best_theta.json", result.best_json());
            io::write_file(fs::path(fit_out) / "fit_trace.csv", result.trace_csv());
            out << "masks " << targets.size() << "\ninitial loss " << fmt(result.initial_loss) << "\nfinal loss "
                << fmt(result.best_loss) << "\ntheta";
            for (const double t : result.theta_best) {
                out << ' ' << fmt(t);
            }
            out << '\n';
        } else if (pipe_cmd->parsed()) {
            PipelineConfig cfg = load_config(pipe_config);
            if (pipe_seed) {
                cfg.growth.seed = *pipe_seed;
            }
            const fs::path dir = pipe_out.empty() ? fs::path(cfg.output_dir) : fs::path(pipe_out);
            grow_and_write(cfg.growth, dir, out);
            // Downstream stages consume the file, so the run exercises the
            // serialized form.
            const Skeleton skel = compute_sizes(deserialize_skeleton(io::read_file(dir / "skeleton.json")), cfg.sizing);
            const TubeMesh mesh = build_mesh(skel, cfg.sizing);
            io::write_file(dir / "mesh.obj", io::mesh_to_obj(mesh));
            Rng sample_rng = substream(cfg.growth.seed, "sampling");
            const SurfaceCloud cloud = sample_surface(mesh, cfg.density, sample_rng);
            io::write_file(dir / "cloud.ply", io::cloud_to_ply(cloud));
            const GaussianCloud g = init_gaussians(cloud, cfg.opacity, cfg.palette);
            io::write_file(dir / "gaussians.ply", io::gaussians_to_ply(g));
            const auto views = render_gaussians(g, rig_for(skel.bounds(), cfg.rig, cfg.growth.seed));
            write_views(views, dir, DepthFormat::pfm, false);
            out << "mesh vertices " << mesh.vertices.size() << " faces " << mesh.faces.size() << '\n'
                << "points " << cloud.size() << '\n'
                << "views " << views.size() << '\n';
        }
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return kIoFailure;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return kInvalid;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kIoFailure;
    }
    return kOk;
}

}  // namespace bonsai::cli
