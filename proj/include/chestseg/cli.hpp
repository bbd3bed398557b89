#pragma once

// Command-line front end: synth, segment, extract, compare, render.
//
// Every subcommand writes into the directory given by --out (created if
// needed). Errors are reported on `err` with a nonzero exit code.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "chestseg/depth_io.hpp"
#include "chestseg/kv.hpp"
#include "chestseg/noise.hpp"
#include "chestseg/phantom.hpp"
#include "chestseg/pipeline.hpp"
#include "chestseg/signal.hpp"
#include "chestseg/spectral.hpp"

namespace chestseg {

namespace fs = std::filesystem;

namespace detail {

// Flags that override PipelineConfig fields. Only flags given on the command
// line are applied, so a --config file supplies everything else.
struct ConfigFlags {
    std::string config_path;
    std::optional<double> max_distance_mm;
    std::optional<int> median_radius;
    std::optional<int> margin;
    std::optional<double> canny_sigma;
    std::optional<double> canny_low;
    std::optional<double> canny_high;
    std::optional<int> dilate_radius;
    std::optional<double> segment_seconds;
    std::optional<double> stride_seconds;
    std::optional<double> band_low;
    std::optional<double> band_high;
    std::optional<double> amp_frac;
    std::optional<std::string> window;
    std::optional<double> min_peak_snr;
    std::optional<int> open_radius;
    std::optional<int> close_radius;
    std::optional<double> min_area_frac;
    std::optional<double> conf;
    std::optional<double> motion_thresh;

    void add_preprocess(CLI::App& app) {
        app.add_option("--config", config_path, "Pipeline config file (key = value); flags override it")
            ->check(CLI::ExistingFile);
        app.add_option("--max-distance-mm", max_distance_mm, "Readings beyond this distance are invalid (default 3000)");
        app.add_option("--median-radius", median_radius, "Pepper-inpainting window radius in pixels (default 10)");
    }

    void add_ignore(CLI::App& app) {
        app.add_option("--margin", margin, "Ignored border width in pixels (default: 50 px scaled to a 640 px wide frame)");
        app.add_option("--canny-sigma", canny_sigma, "Gaussian smoothing before Canny (default 1.4)");
        app.add_option("--canny-low", canny_low, "Canny low hysteresis threshold, fraction of max gradient (default 0.1)");
        app.add_option("--canny-high", canny_high, "Canny high hysteresis threshold, fraction of max gradient (default 0.25)");
        app.add_option("--dilate-radius", dilate_radius, "Edge dilation radius (default 2)");
    }

    void add_band(CLI::App& app) {
        app.add_option("--band-low", band_low, "Breathing band lower edge in Hz (default 0.2)");
        app.add_option("--band-high", band_high, "Breathing band upper edge in Hz (default 0.33)");
        app.add_option("--window", window, "Spectral window")->check(CLI::IsMember({"rect", "hann"}));
    }

    void add_segmentation(CLI::App& app) {
        app.add_option("--segment-seconds", segment_seconds, "Segment length in seconds (default 30)");
        app.add_option("--stride-seconds", stride_seconds, "Segment stride in seconds; 0 = segment length (default 0)");
        app.add_option("--amp-frac", amp_frac, "Relative amplitude threshold in (0, 1) (default 0.3)");
        app.add_option("--min-peak-snr", min_peak_snr,
                       "Per-pixel in-band peak over out-of-band median; <= 0 disables (default 3)");
        app.add_option("--open-radius", open_radius, "Opening radius (default 1)");
        app.add_option("--close-radius", close_radius, "Closing radius (default 2)");
        app.add_option("--min-area-frac", min_area_frac, "Smallest kept component, fraction of frame (default 0.0005)");
        app.add_option("--conf", conf, "Confidence threshold in (0, 1] (default 0.5)");
        app.add_option("--motion-thresh", motion_thresh,
                       "Mean absolute frame difference marking a posture change; <= 0 disables (default 0.005)");
    }

    PipelineConfig resolve() const {
        PipelineConfig c;
        if (!config_path.empty()) c = PipelineConfig::from_key_values(read_key_value_file(config_path));
        auto put = [](auto& field, const auto& flag) {
            if (flag) field = *flag;
        };
        put(c.preprocess.max_distance_mm, max_distance_mm);
        put(c.preprocess.median_radius, median_radius);
        put(c.ignore.margin, margin);
        put(c.ignore.canny.sigma, canny_sigma);
        put(c.ignore.canny.low, canny_low);
        put(c.ignore.canny.high, canny_high);
        put(c.ignore.dilate_radius, dilate_radius);
        put(c.segment_seconds, segment_seconds);
        put(c.stride_seconds, stride_seconds);
        put(c.band_low_hz, band_low);
        put(c.band_high_hz, band_high);
        put(c.amp_threshold_frac, amp_frac);
        if (window) c.window = parse_window(*window);
        put(c.min_peak_snr, min_peak_snr);
        put(c.morph.open_radius, open_radius);
        put(c.morph.close_radius, close_radius);
        put(c.morph.min_area_frac, min_area_frac);
        put(c.confidence, conf);
        put(c.motion_thresh, motion_thresh);
        c.validate();
        return c;
    }
};

inline void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw Error(dir.string() + ": cannot create output directory");
}

inline std::size_t resolve_workers(std::size_t flag) { return flag > 0 ? flag : default_worker_count(); }

inline Rect parse_rect(const std::string& text) {
    std::vector<long> v;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) v.push_back(parse_int(trim(item), "--rect"));
    if (v.size() != 4) throw Error("--rect: expected x,y,w,h");
    return {v[0], v[1], v[2], v[3]};
}

inline std::string rect_string(const Rect& r) {
    return std::to_string(r.x) + "," + std::to_string(r.y) + "," + std::to_string(r.w) + "," + std::to_string(r.h);
}

inline void put_report(KeyValueDoc& doc, const std::string& prefix, const RoiReport& r) {
    doc.set(prefix + "dominant_freq_hz", r.dominant_freq_hz);
    doc.set(prefix + "in_band_peak_amplitude", r.in_band_peak_amplitude);
    doc.set(prefix + "spectral_snr", r.spectral_snr);
    doc.set(prefix + "mask_area", static_cast<std::int64_t>(r.mask_area));
}

/// Line plot of a magnitude spectrum (DC skipped) over 0..Nyquist, with the
/// breathing band edges drawn as dashed gray columns.
inline void save_spectrum_plot(const Spectrum& spec, const Band& band, const fs::path& path,
                               std::size_t width = 512, std::size_t height = 200) {
    std::vector<std::uint16_t> px(width * height, 0);
    const double nyquist = spec.frequencies.back();
    double peak = 0.0;
    for (std::size_t k = 1; k < spec.magnitudes.size(); ++k) peak = std::max(peak, spec.magnitudes[k]);
    auto col_of = [&](double f) {
        return std::min(width - 1, static_cast<std::size_t>(std::lround(f / nyquist * static_cast<double>(width - 1))));
    };
    for (double edge : {band.low_hz, band.high_hz}) {
        if (edge > nyquist) continue;
        const auto x = col_of(edge);
        for (std::size_t y = 0; y < height; y += 2) px[y * width + x] = 96;
    }
    auto row_of = [&](double m) {
        const double v = peak > 0.0 ? m / peak : 0.0;
        return static_cast<long>(std::lround((1.0 - v) * static_cast<double>(height - 1)));
    };
    long prev_x = -1;
    long prev_y = 0;
    for (std::size_t k = 1; k < spec.magnitudes.size(); ++k) {
        const auto x = static_cast<long>(col_of(spec.frequencies[k]));
        const long y = row_of(spec.magnitudes[k]);
        if (prev_x >= 0) {
            // Vertical run between consecutive points keeps the line connected.
            const long steps = std::max({std::labs(x - prev_x), std::labs(y - prev_y), 1L});
            for (long s = 0; s <= steps; ++s) {
                const long xx = prev_x + (x - prev_x) * s / steps;
                const long yy = prev_y + (y - prev_y) * s / steps;
                px[static_cast<std::size_t>(yy) * width + static_cast<std::size_t>(xx)] = 255;
            }
        }
        prev_x = x;
        prev_y = y;
    }
    write_pgm(path, width, height, 255, px);
}

inline std::string frame_name(std::size_t t) {
    std::ostringstream os;
    os << "frame_" << std::setw(5) << std::setfill('0') << t << ".pgm";
    return os.str();
}

inline std::string segment_prefix(std::size_t k) {
    std::ostringstream os;
    os << "seg" << std::setw(3) << std::setfill('0') << k << "_";
    return os.str();
}

// ---------------------------------------------------------------------------
// Subcommands

struct SynthArgs {
    std::string spec_path;
    std::string out;
    std::uint64_t seed = 1;
    bool clean = false;
    std::optional<double> amplitude_mm;
    std::optional<double> freq_hz;
    std::optional<double> duration_s;
    std::size_t workers = 0;
};

inline void run_synth(const SynthArgs& a, std::ostream& out) {
    PhantomSpec spec;
    if (!a.spec_path.empty()) spec = PhantomSpec::from_key_values(read_key_value_file(a.spec_path));
    if (a.clean) spec = spec.without_noise();
    if (a.amplitude_mm) spec.breathing_amplitude_mm = *a.amplitude_mm;
    if (a.freq_hz) spec.breathing_freq_hz = *a.freq_hz;
    if (a.duration_s) spec.duration_s = *a.duration_s;
    const auto ph = generate_phantom(spec, a.seed, resolve_workers(a.workers));

    const fs::path dir = a.out;
    ensure_dir(dir / "frames");
    SequenceManifest m;
    m.fps = spec.fps;
    m.width = spec.width;
    m.height = spec.height;
    m.gt_mask = "ground_truth_mask.pgm";
    m.gt_freq_hz = spec.breathing_freq_hz;
    for (std::size_t t = 0; t < ph.sequence.length(); ++t) {
        const fs::path rel = fs::path("frames") / frame_name(t);
        write_depth_frame(dir / rel, ph.sequence.frames[t]);
        m.frames.push_back(rel);
    }
    write_manifest(dir / "manifest.txt", m);
    save_mask(ph.truth.chest_mask, dir / "ground_truth_mask.pgm");

    KeyValueDoc truth = spec.to_key_values();
    truth.set("seed", std::to_string(a.seed));
    truth.set("chest_area", static_cast<std::int64_t>(count_true(ph.truth.chest_mask)));
    for (const auto& e : ph.truth.epochs) {
        truth.add("epoch", std::to_string(e.start_frame) + " " + std::to_string(e.dx) + " " + std::to_string(e.dy));
    }
    write_key_value_file(dir / "ground_truth.txt", truth);
    out << "wrote " << ph.sequence.length() << " frames to " << (dir / "manifest.txt").string() << "\n";
}

struct SegmentArgs {
    std::string manifest;
    std::string out;
    bool debug_images = false;
    std::size_t workers = 0;
    ConfigFlags flags;
};

inline void run_segment(const SegmentArgs& a, std::ostream& out) {
    const auto cfg = a.flags.resolve();
    const auto manifest = parse_manifest(a.manifest);
    const auto seq = load_sequence(manifest);
    const auto res = segment_sequence(seq, cfg, {resolve_workers(a.workers), a.debug_images});

    const fs::path dir = a.out;
    ensure_dir(dir);
    save_gray_image(res.confidence, dir / "confidence.pgm");
    save_mask(res.mask, dir / "mask.pgm");

    KeyValueDoc report;
    report.set("frames", static_cast<std::int64_t>(seq.length()));
    report.set("fps", seq.fps);
    report.set("total_segments", static_cast<std::int64_t>(res.total_segments));
    report.set("valid_segments", static_cast<std::int64_t>(res.valid_segments));
    report.set("mask_area", static_cast<std::int64_t>(count_true(res.mask)));
    report.set("ignore_area", static_cast<std::int64_t>(count_true(res.ignore)));
    if (manifest.gt_mask && fs::exists(*manifest.gt_mask)) {
        const auto gt = load_mask(*manifest.gt_mask);
        require_same_shape(gt, res.mask, "ground-truth mask");
        const auto inter = static_cast<double>(count_true(mask_and(gt, res.mask)));
        const auto uni = static_cast<double>(count_true(mask_or(gt, res.mask)));
        const auto area = static_cast<double>(count_true(res.mask));
        const auto gt_area = static_cast<double>(count_true(gt));
        report.set("gt_iou", uni > 0 ? inter / uni : 1.0);
        report.set("gt_precision", area > 0 ? inter / area : 0.0);
        report.set("gt_recall", gt_area > 0 ? inter / gt_area : 0.0);
    }
    for (const auto& [k, v] : cfg.to_key_values().entries) report.set("config." + k, v);
    report.body.push_back("# segment start length max_motion excluded refined_area");
    for (std::size_t k = 0; k < res.segments.size(); ++k) {
        const auto& s = res.segments[k];
        report.body.push_back(std::to_string(k) + " " + std::to_string(s.start) + " " + std::to_string(s.length) +
                              " " + format_double(s.max_motion) + " " + (s.motion_excluded ? "1" : "0") + " " +
                              std::to_string(count_true(s.refined)));
    }
    write_key_value_file(dir / "segment_report.txt", report);

    if (a.debug_images) {
        // One image per pipeline stage and segment, in processing order.
        const fs::path dbg = dir / "debug";
        ensure_dir(dbg);
        for (std::size_t k = 0; k < res.segments.size(); ++k) {
            const auto& s = res.segments[k];
            const auto p = segment_prefix(k);
            save_gray_image(s.reference, dbg / (p + "1_median.pgm"));
            save_mask(s.ignore, dbg / (p + "2_ignore.pgm"));
            save_gray_image(s.amplitude_full, dbg / (p + "3_amplitude_full.pgm"));
            save_gray_image(s.amplitude, dbg / (p + "4_amplitude_band.pgm"));
            save_mask(s.thresholded, dbg / (p + "5_thresholded.pgm"));
            save_mask(s.refined, dbg / (p + "6_refined.pgm"));
        }
        save_gray_image(res.confidence, dbg / "7_confidence.pgm");
        save_mask(res.mask, dbg / "8_final_mask.pgm");
    }
    out << "mask area " << count_true(res.mask) << " px from " << res.valid_segments << "/" << res.total_segments
        << " segments\n";
}

struct ExtractArgs {
    std::string manifest;
    std::string mask;
    std::string out;
    std::size_t workers = 0;
    ConfigFlags flags;
};

inline void run_extract(const ExtractArgs& a, std::ostream& out) {
    const auto cfg = a.flags.resolve();
    const auto manifest = parse_manifest(a.manifest);
    const auto seq = load_sequence(manifest);
    const auto mask = load_mask(a.mask);
    require_same_shape(seq.frames.front(), mask, "mask vs frames");
    const auto signal = extract_breathing_signal(seq, mask, cfg.preprocess, resolve_workers(a.workers));
    const auto roi = analyze_signal(signal, cfg.band(), count_true(mask), cfg.window);

    const fs::path dir = a.out;
    ensure_dir(dir);
    KeyValueDoc sig;
    sig.set("fps", seq.fps);
    sig.set("samples", static_cast<std::int64_t>(signal.samples.size()));
    for (double v : signal.samples) sig.body.push_back(format_double(v));
    write_key_value_file(dir / "signal.txt", sig);

    KeyValueDoc report;
    put_report(report, "", roi);
    const double bin_width = seq.fps / static_cast<double>(signal.samples.size());
    report.set("bin_width_hz", bin_width);
    report.set("frames", static_cast<std::int64_t>(seq.length()));
    report.set("fps", seq.fps);
    report.set("band_low_hz", cfg.band_low_hz);
    report.set("band_high_hz", cfg.band_high_hz);
    report.set("window", std::string(to_string(cfg.window)));
    if (manifest.gt_freq_hz) {
        report.set("gt_freq_hz", *manifest.gt_freq_hz);
        report.set("freq_error_bins", std::abs(roi.dominant_freq_hz - *manifest.gt_freq_hz) / bin_width);
    }
    write_key_value_file(dir / "report.txt", report);
    save_spectrum_plot(pixel_spectrum(signal.samples, signal.fps, cfg.window), cfg.band(), dir / "spectrum.pgm");
    out << "dominant frequency " << format_double(roi.dominant_freq_hz) << " Hz, spectral SNR "
        << format_double(roi.spectral_snr) << "\n";
}

struct CompareArgs {
    std::string manifest;
    std::string mask;
    std::string out;
    std::string rect;
    double rect_factor = 4.0;
    std::size_t workers = 0;
    ConfigFlags flags;
};

inline void run_compare(const CompareArgs& a, std::ostream& out) {
    const auto cfg = a.flags.resolve();
    const auto manifest = parse_manifest(a.manifest);
    const auto seq = load_sequence(manifest);
    const auto automatic = load_mask(a.mask);
    require_same_shape(seq.frames.front(), automatic, "mask vs frames");
    if (count_true(automatic) == 0) throw Error(a.mask + ": automatic mask is empty");
    const auto workers = resolve_workers(a.workers);

    Rect rect;
    std::string rect_source;
    if (!a.rect.empty()) {
        rect = parse_rect(a.rect);
        rect_source = "manual";
    } else {
        // Centered on the ground-truth chest when the manifest names one,
        // otherwise on the automatic mask.
        Mask around = automatic;
        rect_source = "scaled_auto_mask";
        if (manifest.gt_mask && fs::exists(*manifest.gt_mask)) {
            around = load_mask(*manifest.gt_mask);
            rect_source = "scaled_ground_truth";
        }
        if (!(a.rect_factor > 0.0)) throw Error("--rect-factor must be > 0");
        rect = scaled_rectangle(around, a.rect_factor);
    }
    const auto rect_mask = manual_rectangle_mask(seq.width(), seq.height(), rect);

    auto roi_of = [&](const Mask& m) {
        return analyze_signal(extract_breathing_signal(seq, m, cfg.preprocess, workers), cfg.band(), count_true(m),
                              cfg.window);
    };
    const auto auto_roi = roi_of(automatic);
    const auto rect_roi = roi_of(rect_mask);

    const fs::path dir = a.out;
    ensure_dir(dir);
    KeyValueDoc report;
    put_report(report, "auto_", auto_roi);
    put_report(report, "rect_", rect_roi);
    report.set("rect", rect_string(rect));
    report.set("rect_source", rect_source);
    report.set("snr_ratio", rect_roi.spectral_snr > 0.0 ? auto_roi.spectral_snr / rect_roi.spectral_snr
                                                        : std::numeric_limits<double>::infinity());
    report.set("auto_at_least_as_sensitive", std::string(auto_roi.spectral_snr >= rect_roi.spectral_snr ? "1" : "0"));
    report.set("bin_width_hz", seq.fps / static_cast<double>(seq.length()));
    if (manifest.gt_freq_hz) report.set("gt_freq_hz", *manifest.gt_freq_hz);
    write_key_value_file(dir / "compare_report.txt", report);
    out << "spectral SNR auto " << format_double(auto_roi.spectral_snr) << " vs rectangle "
        << format_double(rect_roi.spectral_snr) << "\n";
}

struct RenderArgs {
    std::string manifest;
    std::string mask;
    std::string out;
    std::size_t frame = 0;
    ConfigFlags flags;
};

inline void run_render(const RenderArgs& a, std::ostream& out) {
    const auto cfg = a.flags.resolve();
    const auto m = parse_manifest(a.manifest);
    if (a.frame >= m.frames.size()) {
        throw Error("--frame " + std::to_string(a.frame) + " out of range, sequence has " +
                    std::to_string(m.frames.size()) + " frames");
    }
    SequenceManifest one = m;
    one.frames = {m.frames[a.frame]};
    const auto raw = load_sequence(one).frames.front();

    const fs::path dir = a.out;
    ensure_dir(dir);
    const std::string stem = "frame_" + std::to_string(a.frame);
    const auto normalized = normalize_frame(raw, cfg.preprocess.max_distance_mm);
    const auto inpainted = preprocess_frame(raw, cfg.preprocess);
    save_gray_image(normalized, dir / (stem + "_normalized.pgm"));
    save_gray_image(inpainted, dir / (stem + "_inpainted.pgm"));
    IgnoreParams ip = cfg.ignore;
    save_mask(build_ignore_mask(inpainted, ip), dir / (stem + "_ignore.pgm"));

    if (!a.mask.empty()) {
        const auto mask = load_mask(a.mask);
        require_same_shape(mask, raw, "mask vs frame");
        auto gray = quantize_gray(inpainted);
        // Dim the frame so the mask reads as a solid overlay.
        for (std::size_t i = 0; i < gray.size(); ++i) gray[i] = mask[i] ? 255 : static_cast<std::uint16_t>(gray[i] * 3 / 4);
        write_pgm(dir / (stem + "_overlay.pgm"), raw.width(), raw.height(), 255, gray);
    }
    out << "rendered frame " << a.frame << " into " << dir.string() << "\n";
}

}  // namespace detail

/// Runs the command line and returns the process exit code.
inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Chest-region segmentation and breathing-signal extraction for depth video"};
    app.require_subcommand(1);
    app.footer("Worker threads default to $" + std::string(kWorkersEnv) + " or the hardware concurrency.\n"
               "Input recordings are assumed to show a single sleeping patient; nothing else in the scene moves.");

    detail::SynthArgs synth;
    auto* s = app.add_subcommand("synth", "Generate a synthetic phantom recording with ground truth");
    s->add_option("--spec", synth.spec_path, "Phantom spec file (key = value)")->check(CLI::ExistingFile);
    s->add_option("--out", synth.out, "Output directory")->required();
    s->add_option("--seed", synth.seed, "Noise seed");
    s->add_flag("--clean", synth.clean, "Disable every noise source");
    s->add_option("--amplitude-mm", synth.amplitude_mm, "Override the breathing amplitude");
    s->add_option("--freq-hz", synth.freq_hz, "Override the breathing frequency");
    s->add_option("--duration-s", synth.duration_s, "Override the recording length");
    s->add_option("--workers", synth.workers, "Worker threads");

    detail::SegmentArgs seg;
    auto* g = app.add_subcommand("segment", "Segment the chest region of a recording");
    g->add_option("--manifest", seg.manifest, "Sequence manifest")->required()->check(CLI::ExistingFile);
    g->add_option("--out", seg.out, "Output directory")->required();
    g->add_flag("--debug-images", seg.debug_images, "Also write per-stage images under debug/");
    g->add_option("--workers", seg.workers, "Worker threads");
    seg.flags.add_preprocess(*g);
    seg.flags.add_ignore(*g);
    seg.flags.add_band(*g);
    seg.flags.add_segmentation(*g);

    detail::ExtractArgs ext;
    auto* e = app.add_subcommand("extract", "Extract the breathing signal over a mask");
    e->add_option("--manifest", ext.manifest, "Sequence manifest")->required()->check(CLI::ExistingFile);
    e->add_option("--mask", ext.mask, "Region mask (PGM)")->required()->check(CLI::ExistingFile);
    e->add_option("--out", ext.out, "Output directory")->required();
    e->add_option("--workers", ext.workers, "Worker threads");
    ext.flags.add_preprocess(*e);
    ext.flags.add_band(*e);

    detail::CompareArgs cmp;
    auto* c = app.add_subcommand("compare", "Compare an automatic mask with a rectangular ROI");
    c->add_option("--manifest", cmp.manifest, "Sequence manifest")->required()->check(CLI::ExistingFile);
    c->add_option("--mask", cmp.mask, "Automatic mask (PGM)")->required()->check(CLI::ExistingFile);
    c->add_option("--out", cmp.out, "Output directory")->required();
    c->add_option("--rect", cmp.rect, "Manual rectangle x,y,w,h");
    c->add_option("--rect-factor", cmp.rect_factor,
                  "Without --rect: area of the centered rectangle relative to the chest (default 4)");
    c->add_option("--workers", cmp.workers, "Worker threads");
    cmp.flags.add_preprocess(*c);
    cmp.flags.add_band(*c);

    detail::RenderArgs ren;
    auto* r = app.add_subcommand("render", "Render one frame with its preprocessing and overlays");
    r->add_option("--manifest", ren.manifest, "Sequence manifest")->required()->check(CLI::ExistingFile);
    r->add_option("--out", ren.out, "Output directory")->required();
    r->add_option("--frame", ren.frame, "Frame index (default 0)");
    r->add_option("--mask", ren.mask, "Mask to overlay")->check(CLI::ExistingFile);
    ren.flags.add_preprocess(*r);
    ren.flags.add_ignore(*r);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& pe) {
        return app.exit(pe, out, err);
    }

    try {
        if (*s) detail::run_synth(synth, out);
        else if (*g) detail::run_segment(seg, out);
        else if (*e) detail::run_extract(ext, out);
        else if (*c) detail::run_compare(cmp, out);
        else if (*r) detail::run_render(ren, out);
    } catch (const std::exception& ex) {
        err << "error: " << ex.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace chestseg
