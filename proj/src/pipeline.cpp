#include "evpipe/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"

#include "evpipe/event_io.hpp"
#include "evpipe/eval.hpp"
#include "evpipe/rng.hpp"

namespace evpipe::pipeline {

namespace {

using nlohmann::json;

InputFormat parse_format(const std::string& s) {
    if (s == "atis") return InputFormat::atis;
    if (s == "evs") return InputFormat::evs;
    if (s == "csv") return InputFormat::csv;
    throw std::invalid_argument("config: unknown format '" + s + "'");
}

NoiseMode parse_noise_mode(const std::string& s) {
    if (s == "none") return NoiseMode::none;
    if (s == "fixed") return NoiseMode::fixed;
    if (s == "level-set") return NoiseMode::level_set;
    throw std::invalid_argument("config: unknown noise mode '" + s + "'");
}

FilterStage parse_filter(const std::string& s) {
    if (s == "none") return FilterStage::none;
    if (s == "nn") return FilterStage::nn;
    if (s == "dif") return FilterStage::dif;
    throw std::invalid_argument("config: unknown filter '" + s + "'");
}

ReprKind parse_repr(const std::string& s) {
    if (s == "none") return ReprKind::none;
    if (s == "eci") return ReprKind::eci;
    if (s == "voxel-grid") return ReprKind::voxel_grid;
    if (s == "spike-tensor") return ReprKind::spike_tensor;
    if (s == "voxel-graph") return ReprKind::voxel_graph;
    throw std::invalid_argument("config: unknown representation '" + s + "'");
}

std::string format_name(InputFormat f) {
    switch (f) {
        case InputFormat::atis: return "atis";
        case InputFormat::evs: return "evs";
        case InputFormat::csv: return "csv";
    }
    return "?";
}

std::string noise_mode_name(NoiseMode m) {
    switch (m) {
        case NoiseMode::none: return "none";
        case NoiseMode::fixed: return "fixed";
        case NoiseMode::level_set: return "level-set";
    }
    return "?";
}

std::string filter_name(FilterStage f) {
    switch (f) {
        case FilterStage::none: return "none";
        case FilterStage::nn: return "nn";
        case FilterStage::dif: return "dif";
    }
    return "?";
}

std::string repr_name(ReprKind r) {
    switch (r) {
        case ReprKind::none: return "none";
        case ReprKind::eci: return "eci";
        case ReprKind::voxel_grid: return "voxel-grid";
        case ReprKind::spike_tensor: return "spike-tensor";
        case ReprKind::voxel_graph: return "voxel-graph";
    }
    return "?";
}

}  // namespace

RunConfig RunConfig::from_json_text(const std::string& text) {
    const json j = json::parse(text);
    RunConfig c;
    c.input = j.at("input").get<std::string>();
    c.output = j.at("output").get<std::string>();
    if (j.contains("format")) c.format = parse_format(j["format"].get<std::string>());
    if (j.contains("geometry")) {
        c.geometry = SensorGeometry{j["geometry"].at("width").get<std::uint16_t>(),
                                    j["geometry"].at("height").get<std::uint16_t>()};
    }
    if (j.contains("window")) {
        WindowSpec w;
        w.t0 = j["window"].value("t0_us", 0LL);
        w.duration = j["window"].at("duration_us").get<std::int64_t>();
        w.time_bins = j["window"].value("time_bins", 10);
        c.window = w;
    }
    if (j.contains("preset")) c.apply_preset(j["preset"].get<std::string>());
    if (j.contains("noise")) {
        const json& n = j["noise"];
        if (n.contains("mode")) c.noise_mode = parse_noise_mode(n["mode"].get<std::string>());
        c.noise_lambda = n.value("lambda", c.noise_lambda);
        if (n.contains("levels")) c.levels.levels = n["levels"].get<std::vector<double>>();
        c.noise_subdivision = n.value("subdivision", c.noise_subdivision);
    }
    c.base_seed = j.value("base_seed", c.base_seed);
    c.epoch_salt = j.value("epoch_salt", c.epoch_salt);
    if (j.contains("filter")) {
        const json& f = j["filter"];
        if (f.contains("kind")) c.filter = parse_filter(f["kind"].get<std::string>());
        c.nn.temporal_window_us = f.value("temporal_window_us", c.nn.temporal_window_us);
        c.nn.polarity_separate = f.value("polarity_separate", c.nn.polarity_separate);
        c.dif.filter_length_us = f.value("filter_length_us", c.dif.filter_length_us);
        c.dif.scale = f.value("scale", c.dif.scale);
        c.dif.update_factor = f.value("update_factor", c.dif.update_factor);
    }
    if (j.contains("representation")) {
        const json& r = j["representation"];
        if (r.contains("kind")) c.repr = parse_repr(r["kind"].get<std::string>());
        c.repr_time_bins = r.value("time_bins", c.repr_time_bins);
        if (r.contains("voxels")) {
            repr::VoxelGraphParams g;
            const auto v = r["voxels"].get<std::vector<std::uint32_t>>();
            if (v.size() != 3)
                throw std::invalid_argument("config: representation.voxels needs [Vx, Vy, Vt]");
            g.voxels_x = v[0];
            g.voxels_y = v[1];
            g.voxels_t = v[2];
            g.radius = r.value("radius", g.radius);
            g.max_neighbors = r.value("max_neighbors", g.max_neighbors);
            c.graph = g;
        } else if (r.contains("radius") || r.contains("max_neighbors")) {
            repr::VoxelGraphParams g;
            g.voxels_x = 0;  // filled per sample from the geometry
            g.radius = r.value("radius", g.radius);
            g.max_neighbors = r.value("max_neighbors", g.max_neighbors);
            c.graph = g;
        }
    }
    if (j.contains("transforms")) {
        const json& t = j["transforms"];
        c.transforms_enabled = t.value("enabled", true);
        c.transforms.flip_probability = t.value("flip_probability", c.transforms.flip_probability);
        c.transforms.max_translate_fraction =
            t.value("max_translate_fraction", c.transforms.max_translate_fraction);
        c.transforms.crop_scale_min = t.value("crop_scale_min", c.transforms.crop_scale_min);
        c.transforms.crop_scale_max = t.value("crop_scale_max", c.transforms.crop_scale_max);
    }
    c.write_events = j.value("write_events", c.write_events);
    c.workers = j.value("workers", c.workers);
    if (c.workers < 1) throw std::invalid_argument("config: workers must be >= 1");
    return c;
}

RunConfig RunConfig::from_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json_text(text);
}

std::string RunConfig::to_json() const {
    json j;
    j["input"] = input.string();
    j["output"] = output.string();
    j["format"] = format_name(format);
    if (geometry) j["geometry"] = {{"width", geometry->width}, {"height", geometry->height}};
    if (window)
        j["window"] = {{"t0_us", window->t0},
                       {"duration_us", window->duration},
                       {"time_bins", window->time_bins}};
    j["noise"] = {{"mode", noise_mode_name(noise_mode)},
                  {"lambda", noise_lambda},
                  {"levels", levels.levels.empty() ? noise::default_level_set().levels : levels.levels},
                  {"subdivision", noise_subdivision}};
    j["base_seed"] = base_seed;
    j["epoch_salt"] = epoch_salt;
    j["filter"] = {{"kind", filter_name(filter)},
                   {"temporal_window_us", nn.temporal_window_us},
                   {"polarity_separate", nn.polarity_separate},
                   {"filter_length_us", dif.filter_length_us},
                   {"scale", dif.scale},
                   {"update_factor", dif.update_factor}};
    json r = {{"kind", repr_name(repr)}, {"time_bins", repr_time_bins}};
    if (graph) {
        if (graph->voxels_x > 0) r["voxels"] = {graph->voxels_x, graph->voxels_y, graph->voxels_t};
        r["radius"] = graph->radius;
        r["max_neighbors"] = graph->max_neighbors;
    }
    j["representation"] = r;
    j["transforms"] = {{"enabled", transforms_enabled},
                       {"flip_probability", transforms.flip_probability},
                       {"max_translate_fraction", transforms.max_translate_fraction},
                       {"crop_scale_min", transforms.crop_scale_min},
                       {"crop_scale_max", transforms.crop_scale_max}};
    j["write_events"] = write_events;
    j["workers"] = workers;
    return j.dump(2);
}

std::uint64_t RunConfig::effective_base_seed() const {
    return epoch_salt == 0 ? base_seed : rng::splitmix64(base_seed ^ epoch_salt);
}

void RunConfig::apply_preset(const std::string& name) {
    if (name == "original") {
        noise_mode = NoiseMode::none;
        filter = FilterStage::none;
    } else if (name == "filtered") {
        noise_mode = NoiseMode::none;
        filter = FilterStage::nn;
    } else if (name == "noise-1hz") {
        noise_mode = NoiseMode::fixed;
        noise_lambda = 1.0;
        filter = FilterStage::none;
    } else if (name == "noise-injection") {
        noise_mode = NoiseMode::level_set;
        levels = noise::default_level_set();
        filter = FilterStage::none;
    } else {
        throw std::invalid_argument("config: unknown preset '" + name + "'");
    }
}

bool RunManifest::all_ok() const {
    return std::all_of(records.begin(), records.end(), [](const SampleRecord& r) { return r.ok; });
}

std::string RunManifest::to_json() const {
    json j;
    j["config"] = json::parse(config_json);
    j["base_seed"] = base_seed;
    j["tool_version"] = tool_version;
    j["wall_seconds"] = wall_seconds;
    j["records"] = json::array();
    for (const SampleRecord& r : records) {
        json rec;
        rec["input"] = r.input_path;
        rec["sample_id"] = r.sample_id;
        rec["lambda"] = r.lambda;
        rec["counts"] = {{"input", r.counts.input},
                         {"after_inject", r.counts.after_inject},
                         {"after_filter", r.counts.after_filter},
                         {"after_transform", r.counts.after_transform}};
        rec["outputs"] = r.outputs;
        rec["ok"] = r.ok;
        if (!r.ok) rec["error"] = r.error;
        j["records"].push_back(rec);
    }
    return j.dump(2);
}

std::uint64_t sample_id_for_path(const std::string& relative_path) {
    return rng::fnv1a64(relative_path.data(), relative_path.size());
}

namespace {

const char* extension_for(InputFormat f) {
    switch (f) {
        case InputFormat::atis: return ".bin";
        case InputFormat::evs: return ".evs";
        case InputFormat::csv: return ".csv";
    }
    return "";
}

std::vector<std::filesystem::path> collect_inputs(const RunConfig& config) {
    namespace fs = std::filesystem;
    std::vector<fs::path> files;
    if (fs::is_regular_file(config.input)) {
        files.push_back(config.input.filename());
        return files;
    }
    if (!fs::is_directory(config.input))
        throw std::runtime_error("input path does not exist: " + config.input.string());
    const std::string ext = extension_for(config.format);
    for (const auto& entry : fs::recursive_directory_iterator(config.input)) {
        if (!entry.is_regular_file()) continue;
        if (entry.path().extension() != ext) continue;
        files.push_back(fs::relative(entry.path(), config.input));
    }
    std::sort(files.begin(), files.end());
    return files;
}

LabeledStream read_input(const RunConfig& config, const std::filesystem::path& full_path) {
    switch (config.format) {
        case InputFormat::atis:
            return label_all(io::read_atis_bin(io::read_file(full_path), config.geometry),
                             EventLabel::signal);
        case InputFormat::evs:
            return io::read_evs(io::read_file(full_path)).to_labeled();
        case InputFormat::csv: {
            const auto bytes = io::read_file(full_path);
            return label_all(
                io::read_csv(std::string(bytes.begin(), bytes.end()), config.geometry),
                EventLabel::signal);
        }
    }
    throw std::logic_error("unreachable input format");
}

LabeledStream apply_mask(const LabeledStream& labeled, const filters::FilterDecision& decision) {
    LabeledStream out;
    out.stream.geometry = labeled.stream.geometry;
    out.stream.events.reserve(labeled.size());
    out.labels.reserve(labeled.size());
    for (std::size_t i = 0; i < labeled.size(); ++i) {
        if (!decision.keep_mask[i]) continue;
        out.stream.events.push_back(labeled.stream.events[i]);
        out.labels.push_back(labeled.labels[i]);
    }
    return out;
}

WindowSpec representation_window(const RunConfig& config, const EventStream& stream) {
    if (config.window) {
        WindowSpec w = *config.window;
        if (w.time_bins < 1) w.time_bins = config.repr_time_bins;
        return w;
    }
    WindowSpec w;
    w.time_bins = config.repr_time_bins;
    if (stream.events.empty()) {
        w.t0 = 0;
        w.duration = 1;
    } else {
        w.t0 = stream.events.front().t;
        w.duration = stream.events.back().t - w.t0 + 1;
    }
    return w;
}

repr::VoxelGraphParams graph_params(const RunConfig& config, const SensorGeometry& geometry,
                                    int time_bins) {
    repr::VoxelGraphParams p;
    if (config.graph) p = *config.graph;
    if (!config.graph || config.graph->voxels_x == 0) {
        p.voxels_x = std::max<std::uint32_t>(1, geometry.width / 8);
        p.voxels_y = std::max<std::uint32_t>(1, geometry.height / 8);
        p.voxels_t = static_cast<std::uint32_t>(std::max(1, time_bins));
    }
    return p;
}

SampleRecord process_sample(const RunConfig& config, const std::filesystem::path& rel_path) {
    SampleRecord record;
    record.input_path = rel_path.generic_string();
    record.sample_id = sample_id_for_path(record.input_path);

    const std::uint64_t base = config.effective_base_seed();
    const std::uint64_t sample_seed = rng::sample_seed(base, record.sample_id);

    const std::filesystem::path full_input = std::filesystem::is_regular_file(config.input)
                                                 ? config.input
                                                 : config.input / rel_path;

    LabeledStream labeled = read_input(config, full_input);
    record.counts.input = labeled.size();

    if (config.window)
        labeled = slice_window(labeled, config.window->t0, config.window->duration);

    // Noise stage.
    double lambda = 0.0;
    switch (config.noise_mode) {
        case NoiseMode::none: break;
        case NoiseMode::fixed: lambda = config.noise_lambda; break;
        case NoiseMode::level_set: {
            const noise::LevelSet& set =
                config.levels.levels.empty() ? noise::default_level_set() : config.levels;
            lambda = noise::draw_noise_level(set, base, record.sample_id);
            break;
        }
    }
    record.lambda = lambda;
    if (config.noise_mode != NoiseMode::none && lambda > 0.0) {
        noise::NoiseSpec spec;
        spec.lambda = lambda;
        spec.subdivision = config.noise_subdivision;
        spec.seed = rng::splitmix64(sample_seed ^ rng::kNoiseEventSalt);
        // Existing labels stay authoritative: only the fresh events are
        // noise, so injection runs on the stream and the merge keeps the
        // original labels for the signal side.
        LabeledStream injected = noise::inject_noise(labeled.stream, spec, config.window);
        std::size_t src = 0;
        for (std::size_t i = 0; i < injected.size(); ++i) {
            if (injected.labels[i] == EventLabel::signal) injected.labels[i] = labeled.labels[src++];
        }
        labeled = std::move(injected);
    }
    record.counts.after_inject = labeled.size();

    // Filter stage.
    if (config.filter != FilterStage::none) {
        const filters::FilterDecision decision =
            config.filter == FilterStage::nn ? filters::nn_filter(labeled.stream, config.nn)
                                             : filters::dif_filter(labeled.stream, config.dif);
        labeled = apply_mask(labeled, decision);
    }
    record.counts.after_filter = labeled.size();

    // Geometric augmentation stage.
    if (config.transforms_enabled) {
        const repr::SampledTransform transform =
            repr::random_transform_policy(base, record.sample_id, config.transforms);
        labeled = transform.apply(labeled);
    }
    record.counts.after_transform = labeled.size();

    // Outputs.
    if (config.write_events) {
        std::filesystem::path out_rel = rel_path;
        out_rel.replace_extension(".evs");
        io::write_file_atomic(config.output / out_rel, io::write_evs(labeled));
        record.outputs.push_back(out_rel.generic_string());
    }
    if (config.repr != ReprKind::none) {
        const WindowSpec window = representation_window(config, labeled.stream);
        if (config.repr == ReprKind::voxel_graph) {
            const VoxelGraph graph = repr::voxel_graph(
                labeled.stream, window,
                graph_params(config, labeled.stream.geometry, window.time_bins));
            const io::GraphFiles files = io::write_graph(graph);
            std::filesystem::path nodes_rel = rel_path;
            nodes_rel.replace_extension(".nodes.csv");
            std::filesystem::path edges_rel = rel_path;
            edges_rel.replace_extension(".edges.csv");
            io::write_file_atomic(config.output / nodes_rel, files.nodes_csv);
            io::write_file_atomic(config.output / edges_rel, files.edges_csv);
            record.outputs.push_back(nodes_rel.generic_string());
            record.outputs.push_back(edges_rel.generic_string());
        } else {
            DenseTensor tensor;
            if (config.repr == ReprKind::eci) {
                tensor = repr::event_count_image(labeled.stream, window);
            } else if (config.repr == ReprKind::voxel_grid) {
                tensor = repr::voxel_grid(labeled.stream, window);
            } else {
                tensor = repr::event_spike_tensor(labeled.stream, window);
            }
            std::filesystem::path out_rel = rel_path;
            out_rel.replace_extension(".npy");
            io::write_file_atomic(config.output / out_rel, io::write_npy(tensor));
            record.outputs.push_back(out_rel.generic_string());
        }
    }
    return record;
}

}  // namespace

RunManifest run_dataset(const RunConfig& config) {
    const auto start = std::chrono::steady_clock::now();

    RunManifest manifest;
    manifest.config_json = config.to_json();
    manifest.base_seed = config.base_seed;

    const std::vector<std::filesystem::path> files = collect_inputs(config);
    manifest.records.resize(files.size());
    std::filesystem::create_directories(config.output);

    // File-granular worker pool; records land in path order regardless of
    // completion order, and no two workers ever share an output path.
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= files.size()) break;
            try {
                manifest.records[i] = process_sample(config, files[i]);
            } catch (const std::exception& e) {
                SampleRecord failed;
                failed.input_path = files[i].generic_string();
                failed.sample_id = sample_id_for_path(failed.input_path);
                failed.ok = false;
                failed.error = e.what();
                manifest.records[i] = std::move(failed);
            }
        }
    };

    const int pool = std::max(1, std::min<int>(config.workers, static_cast<int>(files.size())));
    if (pool <= 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(static_cast<std::size_t>(pool));
        for (int i = 0; i < pool; ++i) threads.emplace_back(worker);
        for (std::thread& t : threads) t.join();
    }

    manifest.wall_seconds = std::chrono::duration<double>(
        std::chrono::steady_clock::now() - start).count();
    io::write_file_atomic(config.output / "manifest.json", manifest.to_json());
    return manifest;
}

}  // namespace evpipe::pipeline
