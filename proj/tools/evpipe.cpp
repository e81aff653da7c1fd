// evpipe — command-line front end for the event-camera noise, filtering,
// representation and evaluation toolkit.
//
// Exit codes: 0 success, 1 runtime/I-O failure, 2 usage error.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "evpipe/eval.hpp"
#include "evpipe/event_io.hpp"
#include "evpipe/event_model.hpp"
#include "evpipe/filters.hpp"
#include "evpipe/noise_gen.hpp"
#include "evpipe/pipeline.hpp"
#include "evpipe/representations.hpp"
#include "evpipe/rng.hpp"

namespace {

using namespace evpipe;

struct GeometryOption {
    std::uint16_t width = 0;
    std::uint16_t height = 0;

    std::optional<SensorGeometry> get() const {
        if (width == 0 || height == 0) return std::nullopt;
        return SensorGeometry{width, height};
    }
};

LabeledStream read_events_auto(const std::string& path, std::optional<SensorGeometry> geometry) {
    const std::filesystem::path p(path);
    const auto ext = p.extension().string();
    if (ext == ".evs") return io::read_evs(io::read_file(p)).to_labeled();
    if (ext == ".bin") return label_all(io::read_atis_bin(io::read_file(p), geometry),
                                        EventLabel::signal);
    if (ext == ".csv") {
        const auto bytes = io::read_file(p);
        return label_all(io::read_csv(std::string(bytes.begin(), bytes.end()), geometry),
                         EventLabel::signal);
    }
    throw std::runtime_error("unrecognised input extension '" + ext + "' (want .evs/.bin/.csv)");
}

bool input_is_labeled(const std::string& path) {
    if (std::filesystem::path(path).extension() != ".evs") return false;
    return io::read_evs(io::read_file(path)).labels.has_value();
}

filters::FilterDecision run_filter(const std::string& kind, const EventStream& stream,
                                   const filters::NnParams& nn, const filters::DifParams& dif) {
    if (kind == "nn") return filters::nn_filter(stream, nn);
    if (kind == "dif") return filters::dif_filter(stream, dif);
    throw std::invalid_argument("unknown filter '" + kind + "'");
}

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text << "\n";
    } else {
        io::write_file_atomic(out_path, text);
    }
}

int cmd_gen_noise(const GeometryOption& geom, double lambda, std::int64_t duration_us,
                  std::uint32_t subdiv, std::uint64_t seed, const std::string& out) {
    const SensorGeometry geometry{geom.width, geom.height};
    EventStream noise_stream;
    noise_stream.geometry = geometry;
    if (lambda > 0.0)
        noise_stream = noise::generate_noise(geometry, lambda, duration_us, subdiv, seed);
    io::write_file_atomic(out, io::write_evs(label_all(std::move(noise_stream), EventLabel::noise)));
    return 0;
}

int cmd_inject(const std::string& in, const GeometryOption& geom, double lambda,
               std::uint32_t subdiv, std::uint64_t seed, const std::string& recorded,
               std::int64_t offset_us, std::int64_t t0, std::int64_t duration,
               const std::string& out) {
    const LabeledStream input = read_events_auto(in, geom.get());
    std::optional<WindowSpec> window;
    if (duration > 0) window = WindowSpec{t0, duration, 1};

    LabeledStream result;
    if (!recorded.empty()) {
        const LabeledStream rec = read_events_auto(recorded, std::nullopt);
        WindowSpec target = window ? *window : WindowSpec{0, 0, 1};
        if (!window) {
            if (input.stream.events.empty())
                throw std::runtime_error("inject: empty signal needs an explicit window");
            target.t0 = input.stream.events.front().t;
            target.duration = input.stream.events.back().t - target.t0 + 1;
        }
        result = noise::mix_recorded_noise(input.stream, rec.stream, target, offset_us);
    } else {
        result = noise::inject_noise(input.stream, noise::NoiseSpec{lambda, subdiv, seed}, window);
    }
    io::write_file_atomic(out, io::write_evs(result));
    std::cout << "{\"events\": " << result.size() << ", \"noise_added\": "
              << result.size() - input.size() << "}\n";
    return 0;
}

int cmd_filter(const std::string& in, const GeometryOption& geom, const std::string& kind,
               const filters::NnParams& nn, const filters::DifParams& dif,
               const std::string& out, const std::string& report_path) {
    const LabeledStream input = read_events_auto(in, geom.get());
    const bool labeled = input_is_labeled(in);
    const filters::FilterDecision decision = run_filter(kind, input.stream, nn, dif);

    LabeledStream kept;
    kept.stream.geometry = input.stream.geometry;
    for (std::size_t i = 0; i < input.size(); ++i) {
        if (!decision.keep_mask[i]) continue;
        kept.stream.events.push_back(input.stream.events[i]);
        kept.labels.push_back(input.labels[i]);
    }
    if (!out.empty()) {
        io::write_file_atomic(out, labeled ? io::write_evs(kept)
                                           : io::write_evs_unlabeled(kept.stream));
    }

    if (labeled) {
        const auto report = eval::confusion(input, decision);
        if (!report_path.empty())
            io::write_file_atomic(report_path, report.to_json());
        std::cout << report.to_json() << "\n";
    } else {
        if (!report_path.empty())
            std::cerr << "warning: input is unlabeled, no confusion report written\n";
        std::cout << "{\"kept\": " << kept.size() << ", \"removed\": "
                  << input.size() - kept.size() << "}\n";
    }
    return 0;
}

std::string shape_string(const DenseTensor& tensor) {
    std::string s = "(";
    for (std::size_t i = 0; i < tensor.shape.size(); ++i) {
        if (i) s += ", ";
        s += std::to_string(tensor.shape[i]);
    }
    s += ")";
    return s;
}

int cmd_repr(const std::string& in, const GeometryOption& geom, const std::string& kind,
             std::int64_t t0, std::int64_t duration, int time_bins,
             const std::vector<std::uint32_t>& voxels, double radius, std::uint32_t max_neighbors,
             const std::string& out) {
    const LabeledStream input = read_events_auto(in, geom.get());
    const EventStream& stream = input.stream;

    WindowSpec window;
    window.time_bins = time_bins;
    if (duration > 0) {
        window.t0 = t0;
        window.duration = duration;
    } else if (!stream.events.empty()) {
        window.t0 = stream.events.front().t;
        window.duration = stream.events.back().t - window.t0 + 1;
    } else {
        window.t0 = 0;
        window.duration = 1;
    }
    if (slice_window(stream, window.t0, window.duration).empty() && !stream.events.empty())
        std::cerr << "warning: window contains no events, output will be empty\n";

    if (kind == "voxel-graph") {
        repr::VoxelGraphParams params;
        if (voxels.size() == 3) {
            params.voxels_x = voxels[0];
            params.voxels_y = voxels[1];
            params.voxels_t = voxels[2];
        } else {
            params.voxels_x = std::max<std::uint32_t>(1, stream.geometry.width / 8);
            params.voxels_y = std::max<std::uint32_t>(1, stream.geometry.height / 8);
            params.voxels_t = static_cast<std::uint32_t>(window.time_bins);
        }
        params.radius = radius;
        params.max_neighbors = max_neighbors;
        const VoxelGraph graph = repr::voxel_graph(stream, window, params);
        const io::GraphFiles files = io::write_graph(graph);
        io::write_file_atomic(out + ".nodes.csv", files.nodes_csv);
        io::write_file_atomic(out + ".edges.csv", files.edges_csv);
        std::cout << "nodes: " << graph.nodes.size() << ", edges: " << graph.edges.size() << "\n";
        return 0;
    }

    DenseTensor tensor;
    if (kind == "eci") {
        tensor = repr::event_count_image(stream, window);
    } else if (kind == "voxel-grid") {
        tensor = repr::voxel_grid(stream, window);
    } else if (kind == "spike-tensor") {
        tensor = repr::event_spike_tensor(stream, window);
    } else {
        throw std::invalid_argument("unknown representation '" + kind + "'");
    }
    io::write_file_atomic(out, io::write_npy(tensor));
    std::cout << "shape: " << shape_string(tensor) << "\n";
    return 0;
}

int cmd_augment(const std::string& in, const GeometryOption& geom, std::uint64_t base_seed,
                std::uint64_t sample_id, const std::string& sample_path,
                const std::vector<double>& levels, std::uint32_t subdiv, bool no_noise,
                bool no_transforms, const repr::TransformPolicyConfig& tconfig,
                const std::string& out) {
    const LabeledStream input = read_events_auto(in, geom.get());
    const std::uint64_t id =
        sample_path.empty() ? sample_id : pipeline::sample_id_for_path(sample_path);

    LabeledStream result = input;
    double lambda = 0.0;
    if (!no_noise) {
        noise::LevelSet set = levels.empty() ? noise::default_level_set() : noise::LevelSet{levels};
        lambda = noise::draw_noise_level(set, base_seed, id);
        if (lambda > 0.0) {
            noise::NoiseSpec spec;
            spec.lambda = lambda;
            spec.subdivision = subdiv;
            spec.seed = rng::splitmix64(rng::sample_seed(base_seed, id) ^ rng::kNoiseEventSalt);
            result = noise::inject_noise(result.stream, spec);
        }
    }
    repr::SampledTransform transform;
    if (!no_transforms) {
        transform = repr::random_transform_policy(base_seed, id, tconfig);
        result = transform.apply(result);
    }
    io::write_file_atomic(out, io::write_evs(result));

    nlohmann::json j;
    j["sample_id"] = id;
    j["lambda"] = lambda;
    j["flip"] = transform.flip;
    j["crop_scale"] = transform.crop_scale;
    j["events_out"] = result.size();
    std::cout << j.dump() << "\n";
    return 0;
}

int cmd_eval_filter(const std::string& in, const std::string& kind, const filters::NnParams& nn,
                    const filters::DifParams& dif, const std::vector<std::int64_t>& sweep_list,
                    const std::string& out) {
    const io::EvsContents contents = io::read_evs(io::read_file(in));
    if (!contents.labels)
        throw std::runtime_error("eval-filter: input carries no signal/noise labels");
    const LabeledStream labeled = contents.to_labeled();

    if (!sweep_list.empty()) {
        const auto fkind = kind == "nn" ? filters::FilterKind::nn : filters::FilterKind::dif;
        const auto points = filters::sweep(fkind, sweep_list, labeled);
        std::string json_out = "[";
        for (std::size_t i = 0; i < points.size(); ++i) {
            if (i) json_out += ", ";
            json_out += "{\"threshold_us\": " + io::format_double(points[i].threshold_us) +
                        ", \"TPR\": " + io::format_double(points[i].tpr) +
                        ", \"FPR\": " + io::format_double(points[i].fpr) + "}";
        }
        json_out += "]";
        emit(json_out, out);
        return 0;
    }

    const filters::FilterDecision decision = run_filter(kind, labeled.stream, nn, dif);
    emit(eval::confusion(labeled, decision).to_json(), out);
    return 0;
}

int cmd_bench(const std::string& kind, std::uint64_t events, double lambda, int repeats,
              int warmup, const GeometryOption& geom, std::int64_t duration_us,
              std::uint64_t seed, const std::string& out) {
    SensorGeometry geometry{640, 480};
    if (auto g = geom.get()) geometry = *g;

    const eval::BenchmarkStream bench =
        eval::make_benchmark_stream(geometry, events, lambda, duration_us, 10, seed);
    const auto fkind = kind == "nn" ? filters::FilterKind::nn : filters::FilterKind::dif;
    eval::BenchFilterParams params;
    const eval::ThroughputReport report =
        eval::throughput_bench(fkind, params, bench.mix.stream, repeats, warmup);

    std::string json_out = "{\"filter\": \"" + kind + "\"";
    json_out += ", \"input\": {\"signal_events\": " + std::to_string(bench.signal_events);
    json_out += ", \"noise_events\": " + std::to_string(bench.noise_events);
    json_out += ", \"lambda_hz_per_px\": " + io::format_double(lambda) + "}";
    json_out += ", \"report\": " + report.to_json() + "}";
    emit(json_out, out);
    return 0;
}

int cmd_dataset_run(const std::string& config_path, int workers_override,
                    const std::string& preset, std::int64_t base_seed_override,
                    std::int64_t epoch_salt) {
    pipeline::RunConfig config = pipeline::RunConfig::from_json_file(config_path);
    if (!preset.empty()) config.apply_preset(preset);
    if (base_seed_override >= 0) config.base_seed = static_cast<std::uint64_t>(base_seed_override);
    if (epoch_salt >= 0) config.epoch_salt = static_cast<std::uint64_t>(epoch_salt);
    if (workers_override > 0) config.workers = workers_override;
    if (const char* env = std::getenv("EVPIPE_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) config.workers = n;
    }

    const pipeline::RunManifest manifest = pipeline::run_dataset(config);
    std::size_t failed = 0;
    for (const auto& r : manifest.records)
        if (!r.ok) ++failed;
    std::cout << "{\"samples\": " << manifest.records.size() << ", \"failed\": " << failed
              << ", \"manifest\": \"" << (config.output / "manifest.json").generic_string()
              << "\"}\n";
    return manifest.all_ok() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"event-camera shot-noise, denoising-filter and representation toolkit"};
    app.require_subcommand(1);

    GeometryOption geom;
    double lambda = 1.0;
    std::int64_t duration_us = 1000000;
    std::uint32_t subdiv = 10;
    std::uint64_t seed = 0;
    std::string in_path, out_path, report_path, recorded_path;
    std::int64_t t0 = 0, window_duration = 0, offset_us = 0;
    std::string filter_kind = "nn";
    filters::NnParams nn;
    filters::DifParams dif;
    std::string repr_kind = "eci";
    int time_bins = 10;
    std::vector<std::uint32_t> voxels;
    double radius = 0.02;
    std::uint32_t max_neighbors = 16;
    std::uint64_t base_seed = 0, sample_id = 0;
    std::string sample_path;
    std::vector<double> levels;
    bool no_noise = false, no_transforms = false;
    repr::TransformPolicyConfig tconfig;
    std::uint64_t bench_events = 10000000;
    std::int64_t bench_duration_us = 10000000;
    int repeats = 3, warmup = 1;
    std::vector<std::int64_t> sweep_list;
    std::string config_path, preset;
    int workers = 0;
    std::int64_t base_seed_override = -1, epoch_salt = -1;

    auto add_geometry = [&](CLI::App* cmd, bool required) {
        auto* w = cmd->add_option("--width", geom.width, "sensor width in pixels");
        auto* h = cmd->add_option("--height", geom.height, "sensor height in pixels");
        if (required) {
            w->required();
            h->required();
        }
    };
    auto add_nn_dif = [&](CLI::App* cmd) {
        cmd->add_option("--temporal-window-us", nn.temporal_window_us, "NN temporal window");
        cmd->add_flag("--per-polarity", nn.polarity_separate,
                      "NN: keep separate timestamp maps per polarity");
        cmd->add_option("--filter-length-us", dif.filter_length_us, "DIF filter length");
        cmd->add_option("--scale", dif.scale, "DIF subregion scale (side = 2^scale px)");
        cmd->add_option("--update-factor", dif.update_factor, "DIF smoothing factor in (0,1]");
    };

    auto* gen = app.add_subcommand("gen-noise", "generate a shot-noise stream (EVS, labels noise)");
    add_geometry(gen, true);
    gen->add_option("--lambda", lambda, "noise intensity in Hz/px")->required();
    gen->add_option("--duration-us", duration_us, "stream duration in microseconds")->required();
    gen->add_option("--subdiv", subdiv, "time-step subdivision factor D");
    gen->add_option("--seed", seed, "RNG seed");
    gen->add_option("--out", out_path, "output .evs path")->required();

    auto* inject = app.add_subcommand("inject", "inject synthetic or recorded noise into a stream");
    inject->add_option("--in", in_path, "input events (.evs/.bin/.csv)")->required();
    add_geometry(inject, false);
    inject->add_option("--lambda", lambda, "noise intensity in Hz/px");
    inject->add_option("--subdiv", subdiv, "time-step subdivision factor D");
    inject->add_option("--seed", seed, "RNG seed");
    inject->add_option("--recorded", recorded_path, "real noise recording to mix instead");
    inject->add_option("--offset-us", offset_us, "offset into the recording");
    inject->add_option("--t0-us", t0, "window start");
    inject->add_option("--duration-us", window_duration, "window duration (default: signal extent)");
    inject->add_option("--out", out_path, "output .evs path")->required();

    auto* filter = app.add_subcommand("filter", "denoise a stream with the NN or DIF filter");
    filter->add_option("--in", in_path, "input events (.evs/.bin/.csv)")->required();
    add_geometry(filter, false);
    filter->add_option("--filter", filter_kind, "nn|dif")
        ->required()
        ->check(CLI::IsMember({"nn", "dif"}));
    add_nn_dif(filter);
    filter->add_option("--out", out_path, "filtered .evs path");
    filter->add_option("--report", report_path, "confusion report path (labeled input only)");

    auto* repr_cmd = app.add_subcommand("repr", "build a representation tensor or graph");
    repr_cmd->add_option("--in", in_path, "input events (.evs/.bin/.csv)")->required();
    add_geometry(repr_cmd, false);
    repr_cmd->add_option("--repr", repr_kind, "eci|voxel-grid|spike-tensor|voxel-graph")
        ->required()
        ->check(CLI::IsMember({"eci", "voxel-grid", "spike-tensor", "voxel-graph"}));
    repr_cmd->add_option("--t0-us", t0, "window start (default: stream start)");
    repr_cmd->add_option("--duration-us", window_duration, "window duration (default: stream extent)");
    repr_cmd->add_option("--time-bins", time_bins, "temporal bins T");
    repr_cmd->add_option("--voxels", voxels, "voxel counts Vx Vy Vt")->expected(3);
    repr_cmd->add_option("--radius", radius, "graph search radius (normalized)");
    repr_cmd->add_option("--max-neighbors", max_neighbors, "graph degree cap");
    repr_cmd->add_option("--out", out_path, "output path (.npy, or prefix for graph CSVs)")
        ->required();

    auto* augment = app.add_subcommand("augment",
                                       "apply the per-sample noise-injection + transform policy");
    augment->add_option("--in", in_path, "input events (.evs/.bin/.csv)")->required();
    add_geometry(augment, false);
    augment->add_option("--base-seed", base_seed, "policy base seed");
    augment->add_option("--sample-id", sample_id, "numeric sample id");
    augment->add_option("--sample-path", sample_path, "derive the sample id from this path");
    augment->add_option("--levels", levels, "noise level set in Hz/px (default: 14-level grid)");
    augment->add_option("--subdiv", subdiv, "time-step subdivision factor D");
    augment->add_flag("--no-noise", no_noise, "skip the noise draw");
    augment->add_flag("--no-transforms", no_transforms, "skip flip/crop/translate");
    augment->add_option("--flip-p", tconfig.flip_probability, "horizontal flip probability");
    augment->add_option("--translate-frac", tconfig.max_translate_fraction,
                        "max translate fraction");
    augment->add_option("--crop-min", tconfig.crop_scale_min, "crop scale lower bound");
    augment->add_option("--crop-max", tconfig.crop_scale_max, "crop scale upper bound");
    augment->add_option("--out", out_path, "output .evs path")->required();

    auto* eval_cmd = app.add_subcommand("eval-filter", "score a filter against in-band labels");
    eval_cmd->add_option("--in", in_path, "labeled .evs input")->required();
    eval_cmd->add_option("--filter", filter_kind, "nn|dif")
        ->required()
        ->check(CLI::IsMember({"nn", "dif"}));
    add_nn_dif(eval_cmd);
    eval_cmd->add_option("--sweep", sweep_list,
                         "threshold list in us; sweeps instead of a single report");
    eval_cmd->add_option("--out", out_path, "report path (default: stdout)");

    auto* bench = app.add_subcommand("bench", "single-core filter throughput benchmark");
    bench->add_option("--filter", filter_kind, "nn|dif")
        ->required()
        ->check(CLI::IsMember({"nn", "dif"}));
    bench->add_option("--events", bench_events, "target stream size");
    bench->add_option("--lambda", lambda, "noise intensity of the mix in Hz/px");
    bench->add_option("--repeats", repeats, "measured repeats");
    bench->add_option("--warmup", warmup, "unmeasured warmup passes");
    add_geometry(bench, false);
    bench->add_option("--duration-us", bench_duration_us, "synthetic stream duration");
    bench->add_option("--seed", seed, "RNG seed");
    bench->add_option("--out", out_path, "report path (default: stdout)");

    auto* dataset = app.add_subcommand("dataset-run", "batch pipeline over a dataset tree");
    dataset->add_option("--config", config_path, "run config JSON")->required();
    dataset->add_option("--workers", workers, "worker threads (EVPIPE_THREADS overrides)");
    dataset->add_option("--preset", preset, "original|filtered|noise-1hz|noise-injection")
        ->check(CLI::IsMember({"original", "filtered", "noise-1hz", "noise-injection"}));
    dataset->add_option("--base-seed", base_seed_override, "override config base seed");
    dataset->add_option("--epoch-salt", epoch_salt, "override config epoch salt");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (app.got_subcommand(gen))
            return cmd_gen_noise(geom, lambda, duration_us, subdiv, seed, out_path);
        if (app.got_subcommand(inject))
            return cmd_inject(in_path, geom, lambda, subdiv, seed, recorded_path, offset_us, t0,
                              window_duration, out_path);
        if (app.got_subcommand(filter))
            return cmd_filter(in_path, geom, filter_kind, nn, dif, out_path, report_path);
        if (app.got_subcommand(repr_cmd))
            return cmd_repr(in_path, geom, repr_kind, t0, window_duration, time_bins, voxels,
                            radius, max_neighbors, out_path);
        if (app.got_subcommand(augment))
            return cmd_augment(in_path, geom, base_seed, sample_id, sample_path, levels, subdiv,
                               no_noise, no_transforms, tconfig, out_path);
        if (app.got_subcommand(eval_cmd))
            return cmd_eval_filter(in_path, filter_kind, nn, dif, sweep_list, out_path);
        if (app.got_subcommand(bench))
            return cmd_bench(filter_kind, bench_events, lambda, repeats, warmup, geom,
                             bench_duration_us, seed, out_path);
        if (app.got_subcommand(dataset))
            return cmd_dataset_run(config_path, workers, preset, base_seed_override, epoch_salt);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
