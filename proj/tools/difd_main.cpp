// difd: differential image forensics toolkit.
//
// Subcommands: diff (single pair), video (frame stream), forgery
// (split-based consistency check), synth (synthetic scene generator),
// eval (recovery metrics). All outputs land under --out with fixed names;
// identical inputs and flags produce byte-identical artifacts.

#include "difd/error.hpp"
#include "difd/forgery.hpp"
#include "difd/image.hpp"
#include "difd/io.hpp"
#include "difd/kernels.hpp"
#include "difd/pipeline.hpp"
#include "difd/synth.hpp"
#include "difd/threading.hpp"
#include "difd/video.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace difd;

namespace {

std::string real9(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

void write_text_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw FormatError("cannot open '" + path.string() + "' for writing");
    out << content;
    if (!out)
        throw FormatError("write failed: '" + path.string() + "'");
}

IndexRange parse_range(const std::string& text, const char* what) {
    const std::size_t colon = text.find(':');
    if (colon == std::string::npos)
        throw ParamError(std::string(what) + " must be 'start:end'");
    try {
        IndexRange r;
        r.start = std::stoi(text.substr(0, colon));
        r.end = std::stoi(text.substr(colon + 1));
        return r;
    } catch (const std::exception&) {
        throw ParamError(std::string(what) + " must be 'start:end' with integer bounds");
    }
}

std::vector<double> parse_csv_reals(const std::string& text, std::size_t count,
                                    const char* what) {
    std::vector<double> values;
    std::size_t begin = 0;
    while (begin <= text.size()) {
        std::size_t comma = text.find(',', begin);
        if (comma == std::string::npos)
            comma = text.size();
        try {
            values.push_back(std::stod(text.substr(begin, comma - begin)));
        } catch (const std::exception&) {
            throw ParamError(std::string(what) + ": cannot parse component");
        }
        begin = comma + 1;
    }
    if (values.size() != count)
        throw ParamError(std::string(what) + ": expected " + std::to_string(count) +
                         " comma-separated values");
    return values;
}

fs::path prepare_out_dir(const std::string& out) {
    fs::path dir(out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        throw ParamError("cannot create output directory '" + out + "': " + ec.message());
    return dir;
}

std::string amplified_report(const AmplifiedPair& pair, const AnalysisParams& params) {
    std::string text;
    const Image& dp = pair.d_plus;
    text += "width: " + std::to_string(dp.width()) + "\n";
    text += "height: " + std::to_string(dp.height()) + "\n";
    text += "channels: " + std::to_string(dp.channels()) + "\n";
    text += "sigma: " + real9(params.sigma) + "\n";
    text += "radius: " + std::to_string(params.sigma > 0.0 ? params.effective_radius() : 0) + "\n";
    text += "zero_floor: " + real9(params.zero_floor) + "\n";

    auto side = [&](const char* name, const Image& img, double gain, bool degenerate) {
        text += std::string("gain_") + name + ": " + real9(gain) + "\n";
        text += std::string("degenerate_") + name + ": " + (degenerate ? "1" : "0") + "\n";
        SampleLoc loc;
        if (!degenerate)
            loc = argmax_sample(img);
        text += std::string("argmax_") + name + "_channel: " + std::to_string(loc.channel) + "\n";
        text += std::string("argmax_") + name + "_x: " + std::to_string(loc.x) + "\n";
        text += std::string("argmax_") + name + "_y: " + std::to_string(loc.y) + "\n";
    };
    side("plus", pair.d_plus, pair.gain_plus, pair.degenerate_plus);
    side("minus", pair.d_minus, pair.gain_minus, pair.degenerate_minus);
    text += "dminus_encoding: magnitude\n"; // D- files store |D-|; sign lives here
    return text;
}

void write_pair_artifacts(const AmplifiedPair& pair, const fs::path& dir,
                          const std::string& stem, int png_depth) {
    write_image(pair.d_plus, (dir / (stem + "D+.png")).string(), png_depth);
    write_image(pair.d_minus, (dir / (stem + "D-.png")).string(), png_depth);
    write_float_dump(pair.d_plus, (dir / (stem + "D+.difd")).string());
    write_float_dump(pair.d_minus, (dir / (stem + "D-.difd")).string());
}

// ---- subcommand configs ----------------------------------------------------

struct CommonArgs {
    std::string out = ".";
    double sigma = 9.0;
    int radius = 0;
    double zero_floor = 1e-9;
    int png_depth = 16;

    AnalysisParams params(int window = 11) const {
        AnalysisParams p;
        p.sigma = sigma;
        p.truncation_radius = radius;
        p.temporal_window = window;
        p.zero_floor = zero_floor;
        return p;
    }
};

int run_diff(const CommonArgs& common, const std::string& scene_path,
             const std::string& ref_path) {
    const Image p = load_frame(scene_path);
    const Image p_r = load_frame(ref_path);
    const AnalysisParams params = common.params();
    const AmplifiedPair pair = analyze_pair(p, p_r, params);

    const fs::path dir = prepare_out_dir(common.out);
    write_pair_artifacts(pair, dir, "", common.png_depth);
    write_text_file(dir / "report.txt", "tool: diff\n" + amplified_report(pair, params));
    return 0;
}

int run_video(const CommonArgs& common, const std::string& manifest_path,
              const std::string& ref_range, const std::string& ref_image,
              bool adjacent, int lag, const std::string& analyze, int window,
              bool energy_only) {
    const int modes = (!ref_range.empty()) + (!ref_image.empty()) + (adjacent ? 1 : 0);
    if (modes != 1)
        throw ParamError("choose exactly one of --ref-range, --ref-image, --adjacent");

    const FrameManifest manifest = read_manifest(manifest_path);
    if (manifest.entries.empty())
        throw ParamError("manifest lists no frames");

    FrameStream stream(manifest.fps);
    for (const auto& [index, path] : manifest.entries)
        stream.append(index, load_frame(path));

    // resolve the reference once; analysis and the artifact writer share it
    ReferenceSpec ref;
    if (!ref_range.empty()) {
        const IndexRange r = parse_range(ref_range, "--ref-range");
        ref = ReferenceSpec::external(
            resolve_reference(stream, ReferenceSpec::frame_range(r.start, r.end)));
    } else if (!ref_image.empty()) {
        ref = ReferenceSpec::external(load_frame(ref_image));
    } else {
        ref = ReferenceSpec::adjacent(lag);
    }

    std::optional<IndexRange> analyze_range;
    if (!analyze.empty())
        analyze_range = parse_range(analyze, "--analyze");

    const AnalysisParams params = common.params(window);
    const fs::path dir = prepare_out_dir(common.out);

    std::string csv = "frame_index,energy\n";
    int analyzed = 0;
    analyze_video_stream(stream, ref, params, analyze_range, [&](VideoFrameResult&& fr) {
        csv += std::to_string(fr.frame_index) + "," + real9(fr.energy) + "\n";
        if (!energy_only) {
            char stem[32];
            std::snprintf(stem, sizeof stem, "frame_%06d_", fr.frame_index);
            write_pair_artifacts(fr.pair, dir, stem, common.png_depth);
        }
        ++analyzed;
    });
    write_text_file(dir / "energy.csv", csv);

    std::string report = "tool: video\n";
    report += "sigma: " + real9(params.sigma) + "\n";
    report += "window: " + std::to_string(params.temporal_window) + "\n";
    report += "frames_analyzed: " + std::to_string(analyzed) + "\n";
    const char* mode = !ref_range.empty()   ? "frame-range-average"
                       : !ref_image.empty() ? "external-image"
                                            : "adjacent-frame";
    report += std::string("reference_mode: ") + mode + "\n";
    if (adjacent)
        report += "lag: " + std::to_string(lag) + "\n";

    if (!adjacent) {
        write_float_dump(ref.external_frame, (dir / "reference.difd").string());
        write_image(ref.external_frame, (dir / "reference.png").string(), common.png_depth,
                    true);
    }
    write_text_file(dir / "report.txt", report);
    return 0;
}

int run_forgery(const CommonArgs& common, const std::string& scene_path,
                const std::string& ref_path, const std::string& rect,
                const std::string& mask_path, double evidence_threshold, double tau,
                double min_support) {
    if (rect.empty() == mask_path.empty())
        throw ParamError("choose exactly one of --rect, --mask");

    const Image p = load_frame(scene_path);
    const Image p_r = load_frame(ref_path);

    RegionSpec region;
    if (!rect.empty()) {
        const std::vector<double> v = parse_csv_reals(rect, 4, "--rect");
        region = RegionSpec::rect(static_cast<int>(v[0]), static_cast<int>(v[1]),
                                  static_cast<int>(v[2]), static_cast<int>(v[3]));
    } else {
        region = RegionSpec::mask(load_frame(mask_path));
    }

    const ConsistencyReport report = forgery_score(p, p_r, region, common.params(),
                                                   evidence_threshold, tau, min_support);

    const fs::path dir = prepare_out_dir(common.out);
    write_text_file(dir / "report.txt", "tool: forgery\n" + format_consistency_report(report));
    write_image(report.evidence_mask, (dir / "evidence_mask.png").string(), 8);
    write_image(report.amplified.d_plus, (dir / "D+.png").string(), common.png_depth);
    write_float_dump(report.amplified.d_plus, (dir / "D+.difd").string());

    std::cout << "verdict: " << to_string(report.verdict) << "\n";
    return 0;
}

int run_synth(const std::string& spec_path, const std::string& out, std::uint64_t seed,
              bool seed_given, int frames, int entry_frame, bool stream_given) {
    SceneSpec spec = read_scene_spec(spec_path);
    if (seed_given)
        spec.seed = seed;
    if (stream_given) {
        spec.frames = frames;
        spec.entry_frame = entry_frame;
    }

    const fs::path dir = prepare_out_dir(out);

    std::string info = "tool: synth\n";
    info += "seed: " + std::to_string(spec.seed) + "\n";

    if (spec.frames > 0) {
        SceneStream scene = generate_stream(spec, spec.frames, spec.entry_frame);
        FrameManifest manifest;
        manifest.fps = spec.fps;
        for (int pos = 0; pos < scene.stream.count(); ++pos) {
            char name[32];
            std::snprintf(name, sizeof name, "frame_%06d.difd", scene.stream.index_at(pos));
            write_float_dump(scene.stream.frame(pos), (dir / name).string());
            manifest.entries.emplace_back(scene.stream.index_at(pos), name);
        }
        write_manifest(manifest, (dir / "manifest.tsv").string());
        for (std::size_t i = 0; i < scene.truth.size(); ++i) {
            write_image(scene.truth[i].mask,
                        (dir / ("truth_" + std::to_string(i) + ".png")).string(), 8);
            const auto rg = chroma_rg(scene.truth[i].chroma);
            info += "truth_" + std::to_string(i) + "_chroma: " + real9(rg[0]) + "," +
                    real9(rg[1]) + "\n";
        }
        info += "frames: " + std::to_string(spec.frames) + "\n";
        info += "entry_frame: " + std::to_string(scene.entry_frame) + "\n";
    } else {
        ScenePair pair = generate_pair(spec);
        // PNGs clamp the Gaussian noise tails; the .difd dumps stay lossless.
        write_image(pair.scene, (dir / "p.png").string(), 16, true);
        write_image(pair.reference, (dir / "pr.png").string(), 16, true);
        write_float_dump(pair.scene, (dir / "p.difd").string());
        write_float_dump(pair.reference, (dir / "pr.difd").string());
        for (std::size_t i = 0; i < pair.truth.size(); ++i) {
            write_image(pair.truth[i].mask,
                        (dir / ("truth_" + std::to_string(i) + ".png")).string(), 8);
            const auto rg = chroma_rg(pair.truth[i].chroma);
            info += "truth_" + std::to_string(i) + "_chroma: " + real9(rg[0]) + "," +
                    real9(rg[1]) + "\n";
            info += "truth_" + std::to_string(i) + "_kind: " +
                    (pair.truth[i].kind == EvidenceField::Kind::reflection ? "reflection"
                                                                           : "occlusion") +
                    "\n";
        }
    }
    write_text_file(dir / "info.txt", info);
    return 0;
}

int run_eval(const std::string& result_path, const std::string& truth_path, double threshold,
             const std::string& chroma, const std::string& out) {
    const Image d_plus = load_frame(result_path);
    Image truth = load_frame(truth_path);

    AmplifiedPair pair;
    pair.d_plus = d_plus;
    pair.d_minus = Image(d_plus.width(), d_plus.height(), d_plus.channels());
    const MinMax mm = sample_min_max(d_plus);
    pair.degenerate_plus = static_cast<double>(mm.max) <= 1e-9;
    pair.degenerate_minus = true;

    std::optional<std::array<double, 2>> expected;
    if (!chroma.empty()) {
        const std::vector<double> v = parse_csv_reals(chroma, 2, "--chroma");
        expected = std::array<double, 2>{v[0], v[1]};
    }

    const RecoveryMetrics metrics = evaluate_recovery(pair, truth, threshold, expected);
    std::string text = "tool: eval\n";
    text += "iou: " + real9(metrics.iou) + "\n";
    text += std::string("argmax_hit: ") + (metrics.argmax_hit ? "1" : "0") + "\n";
    if (metrics.has_chroma_error)
        text += "chroma_error: " + real9(metrics.chroma_error) + "\n";
    std::cout << text;
    if (!out.empty())
        write_text_file(prepare_out_dir(out) / "metrics.txt", text);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"differential image forensics toolkit"};
    app.require_subcommand(1);

    std::string kernels = "auto";
    int threads = 0;
    app.add_option("--kernels", kernels, "kernel backend: auto|scalar|avx2")
        ->capture_default_str();
    app.add_option("--threads", threads, "worker threads (0 = library default)")
        ->capture_default_str();

    CommonArgs diff_common, video_common, forgery_common;
    auto add_common = [](CLI::App* sub, CommonArgs& c, bool with_depth = true) {
        sub->add_option("--out", c.out, "output directory")->capture_default_str();
        sub->add_option("--sigma", c.sigma, "Gaussian sigma in pixels (0 = no filtering)")
            ->capture_default_str();
        sub->add_option("--radius", c.radius, "kernel radius (0 = ceil(3*sigma))")
            ->capture_default_str();
        sub->add_option("--zero-floor", c.zero_floor,
                        "difference extremes at or below this are treated as zero")
            ->capture_default_str();
        if (with_depth)
            sub->add_option("--png-depth", c.png_depth, "PNG bit depth for outputs (8 or 16)")
                ->capture_default_str();
    };

    // diff
    auto* diff = app.add_subcommand("diff", "amplify differences between a scene/reference pair");
    std::string diff_scene, diff_ref;
    diff->add_option("--scene", diff_scene, "scene image p")->required();
    diff->add_option("--ref", diff_ref, "reference baseline image p_r")->required();
    add_common(diff, diff_common);

    // video
    auto* video = app.add_subcommand("video", "analyze a frame stream against a baseline");
    std::string manifest_path, ref_range, ref_image, analyze;
    bool adjacent = false, energy_only = false;
    int lag = 1, window = 11;
    video->add_option("--manifest", manifest_path, "frame manifest (index<TAB>path)")->required();
    video->add_option("--ref-range", ref_range, "average frames start:end as the reference");
    video->add_option("--ref-image", ref_image, "external reference image");
    video->add_flag("--adjacent", adjacent, "difference against the frame lag positions back");
    video->add_option("--lag", lag, "adjacent-frame lag")->capture_default_str();
    video->add_option("--analyze", analyze, "frame index range start:end to analyze");
    video->add_option("--window", window, "temporal box window in frames (odd)")
        ->capture_default_str();
    video->add_flag("--energy-only", energy_only, "skip per-frame image outputs");
    add_common(video, video_common);

    // forgery
    auto* forgery = app.add_subcommand("forgery", "split-based consistency check of a region");
    std::string forgery_scene, forgery_ref, rect, mask_path;
    double evidence_threshold = 0.5, tau = 0.15, min_support = 1e-4;
    forgery->add_option("--scene", forgery_scene, "scene image p")->required();
    forgery->add_option("--ref", forgery_ref, "reference baseline image")->required();
    forgery->add_option("--rect", rect, "query region x,y,w,h");
    forgery->add_option("--mask", mask_path, "query region mask image");
    forgery->add_option("--evidence-threshold", evidence_threshold,
                        "D+ channel-max threshold for the evidence mask")
        ->capture_default_str();
    forgery->add_option("--tau", tau, "chromaticity distance decision threshold")
        ->capture_default_str();
    forgery->add_option("--min-support", min_support,
                        "minimum evidence fraction of valid pixels")
        ->capture_default_str();
    add_common(forgery, forgery_common);

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic scene pair or stream");
    std::string spec_path, synth_out = ".";
    std::uint64_t seed = 0;
    int frames = 0, entry_frame = 0;
    synth->add_option("--spec", spec_path, "scene spec config file")->required();
    synth->add_option("--out", synth_out, "output directory")->capture_default_str();
    auto* seed_opt = synth->add_option("--seed", seed, "override the spec's seed");
    auto* frames_opt = synth->add_option("--frames", frames, "generate a stream of N frames");
    synth->add_option("--entry-frame", entry_frame, "first frame carrying the evidence");

    // eval
    auto* eval = app.add_subcommand("eval", "recovery metrics for a result against a truth mask");
    std::string result_path, truth_path, chroma, eval_out;
    double threshold = 0.5;
    eval->add_option("--result", result_path, "D+ image (.difd or image file)")->required();
    eval->add_option("--truth", truth_path, "ground-truth support mask")->required();
    eval->add_option("--threshold", threshold, "detection threshold on channel-max(D+)")
        ->capture_default_str();
    eval->add_option("--chroma", chroma, "expected evidence chromaticity r,g");
    eval->add_option("--out", eval_out, "directory for metrics.txt (optional)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        kernels::select_backend_by_name(kernels);
        set_max_threads(threads);

        if (diff->parsed())
            return run_diff(diff_common, diff_scene, diff_ref);
        if (video->parsed())
            return run_video(video_common, manifest_path, ref_range, ref_image, adjacent, lag,
                             analyze, window, energy_only);
        if (forgery->parsed())
            return run_forgery(forgery_common, forgery_scene, forgery_ref, rect, mask_path,
                               evidence_threshold, tau, min_support);
        if (synth->parsed())
            return run_synth(spec_path, synth_out, seed, seed_opt->count() > 0, frames,
                             entry_frame, frames_opt->count() > 0);
        if (eval->parsed())
            return run_eval(result_path, truth_path, threshold, chroma, eval_out);
        return 1;
    } catch (const ParamError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
