#pragma once

// The gscat command-line driver. run() never throws: failures become exit
// codes with a diagnostic on the error stream.

#include "gscat/config.hpp"
#include "gscat/experiments.hpp"
#include "gscat/io.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace gscat::cli {

enum ExitCode : int {
    ok = 0,
    failure = 1,
    bad_arguments = 2,
    verification_failed = 3,
    io_failure = 4,
};

struct Options {
    std::string subcommand;
    std::optional<std::string> config_path;
    std::optional<std::string> out_dir;
    std::optional<std::size_t> depth;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> overrides;
    std::optional<std::string> input_wav;  // scatter
    std::optional<std::size_t> length;    // framebounds
    bool pcm16 = false;                    // synth
};

/// Config from --config (or the built-in default), then --set, then the
/// dedicated flags.
inline ExperimentConfig resolve_config(const Options& o) {
    nlohmann::json j = o.config_path ? read_json_file(*o.config_path) : to_json(default_config());
    for (const auto& s : o.overrides) apply_override(j, s);
    ExperimentConfig cfg = config_from_json(j);
    if (o.depth) cfg.depth = *o.depth;
    if (o.seed) cfg.seed = *o.seed;
    if (o.out_dir) cfg.output_dir = *o.out_dir;
    validate(cfg);
    return cfg;
}

namespace detail {

inline void ensure_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw io_error("cannot create directory (" + ec.message() + ")", dir.string());
}

inline std::string envelope_csv(const Tone& tone) {
    std::string csv = "t";
    for (std::size_t n = 1; n <= tone.n_harmonics; ++n) csv += ",A" + std::to_string(n);
    csv += '\n';
    std::vector<std::vector<double>> env;
    for (std::size_t n = 1; n <= tone.n_harmonics; ++n) env.push_back(sample_envelope(tone, n));
    for (std::size_t i = 0; i < tone.length(); ++i) {
        csv += gscat::detail::format_double(static_cast<double>(i) / tone.fs);
        for (const auto& e : env) csv += ',' + gscat::detail::format_double(e[i]);
        csv += '\n';
    }
    return csv;
}

inline cvec configured_signal(const ExperimentConfig& cfg) {
    if (cfg.tones.empty()) throw invalid_argument("config has no tones and no --input was given");
    std::vector<cvec> parts;
    for (const auto& t : cfg.tones) {
        if (t.tone.fs != cfg.tones.front().tone.fs)
            throw invalid_argument("all tones must share one sample rate to be concatenated");
        parts.push_back(synthesize(t.tone));
    }
    return concatenate(parts);
}

// Per-layer image: layer 1 is the modulus grid, deeper layers sum the energy
// of U[q] over all parent paths for each last channel.
inline std::vector<MagnitudeGrid> layer_images(const ScatterTree& tree, const TripletSequence& omega) {
    std::vector<MagnitudeGrid> out;
    for (std::size_t level = 1; level <= tree.depth; ++level) {
        const GaborFrame& frame = omega.frame(level - 1);
        MagnitudeGrid g(frame.channels(), frame.frames(), level, frame.id());
        for (const auto& [q, v] : tree.nodes) {
            if (q.size() != level) continue;
            for (std::size_t m = 0; m < v.size(); ++m) g(q.back(), m) += v[m] * v[m];
        }
        for (auto& v : g.values()) v = std::sqrt(v);
        out.push_back(std::move(g));
    }
    return out;
}

} // namespace detail

inline int cmd_synth(const Options& o, std::ostream& out) {
    const ExperimentConfig cfg = resolve_config(o);
    if (cfg.tones.empty()) throw invalid_argument("config has no tones to synthesize");
    const std::filesystem::path dir = cfg.output_dir;
    detail::ensure_dir(dir);
    const WavFormat fmt = o.pcm16 ? WavFormat::pcm16 : WavFormat::float32;
    for (std::size_t i = 0; i < cfg.tones.size(); ++i) {
        const Tone& tone = cfg.tones[i].tone;
        const std::string stem = "tone" + std::to_string(i);
        const auto wav = dir / (stem + ".wav");
        write_wav(wav, real_part(synthesize(tone)), tone.fs, fmt);
        gscat::detail::write_file(dir / (stem + "_envelopes.csv"), detail::envelope_csv(tone));
        out << wav.string() << '\n';
        if (cfg.tones[i].deformation.kind != DeformationKind::none) {
            const auto def = dir / (stem + "_deformed.wav");
            write_wav(def, real_part(deform(tone, materialize(cfg.tones[i].deformation, tone))), tone.fs, fmt);
            out << def.string() << '\n';
        }
    }
    return ok;
}

inline int cmd_scatter(const Options& o, std::ostream& out) {
    const ExperimentConfig cfg = resolve_config(o);
    cvec signal;
    if (o.input_wav) {
        const WavData wav = read_wav(*o.input_wav);
        signal.assign(wav.samples.begin(), wav.samples.end());
    } else {
        signal = detail::configured_signal(cfg);
    }
    const TripletSequence omega = build_omega(cfg, signal.size());
    const ScatterOptions opt{cfg.scatter.node_budget, cfg.scatter.prune_threshold};
    const FeatureVector fv = extract_features(signal, omega, cfg.depth, opt);
    const std::filesystem::path dir = cfg.output_dir;
    detail::ensure_dir(dir);
    write_features_binary(dir / "features.bin", fv);
    write_features_csv(dir / "features.csv", fv);
    const ScatterTree tree = scatter(signal, omega, cfg.depth, opt);
    const auto images = detail::layer_images(tree, omega);
    for (std::size_t l = 0; l < images.size(); ++l)
        write_spectrogram(images[l], dir / ("layer" + std::to_string(l + 1) + ".pgm"), ImageScale::db);
    out << "paths " << fv.entries.size() << ", feature norm " << feature_norm(fv) << ", signal norm "
        << std::sqrt(gscat::detail::energy(std::span<const std::complex<double>>(signal))) << '\n';
    return ok;
}

inline int cmd_verify(const Options& o, std::ostream& out) {
    const ExperimentConfig cfg = resolve_config(o);
    const VerifyResult res = run_verification(cfg, cfg.seed);
    const std::filesystem::path dir = cfg.output_dir;
    detail::ensure_dir(dir);
    write_report_csv(dir / "report.csv", res.reports);
    write_report_text(dir / "report.txt", res.reports, res.notes);
    out << report_summary(res.reports, res.notes);
    return res.all_passed() ? ok : verification_failed;
}

inline int cmd_figures(const Options& o, std::ostream& out) {
    const ExperimentConfig cfg = resolve_config(o);
    const FigureOutputs figs = run_figures(cfg);
    for (const auto& p : write_figures(figs, cfg.output_dir)) out << p << '\n';
    return ok;
}

inline int cmd_framebounds(const Options& o, std::ostream& out) {
    const ExperimentConfig cfg = resolve_config(o);
    std::size_t len = 0;
    if (o.length) len = *o.length;
    else if (!cfg.tones.empty()) len = cfg.tones.front().tone.length();
    else throw invalid_argument("framebounds needs --length or a configured tone");
    const TripletSequence omega = build_omega(cfg, len);
    out << "layer,L,a,M,A,B\n";
    for (std::size_t l = 0; l < omega.size(); ++l) {
        const GaborFrame& f = omega.frame(l);
        const FrameBounds fb = frame_bounds(f);
        out << l + 1 << ',' << f.signal_length() << ',' << f.time_step() << ',' << f.channels() << ','
            << gscat::detail::format_double(fb.lower) << ',' << gscat::detail::format_double(fb.upper) << '\n';
    }
    return ok;
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    Options o;
    CLI::App app{"Gabor scattering features, tone synthesis and bound verification", "gscat"};
    app.require_subcommand(1, 1);
    app.fallthrough();
    app.add_option("--config", o.config_path, "JSON experiment configuration (version 1)");
    app.add_option("--out", o.out_dir, "output directory");
    app.add_option("--depth", o.depth, "scattering depth");
    app.add_option("--set", o.overrides, "override a config key, e.g. --set omega.0.channels=2048")
        ->type_name("KEY=VALUE");
    app.add_option("--seed", o.seed, "seed for randomized checks");

    auto* synth = app.add_subcommand("synth", "write each configured tone as WAV plus an envelope CSV");
    synth->add_flag("--pcm16", o.pcm16, "write 16-bit PCM instead of float32");
    auto* scatter_cmd = app.add_subcommand("scatter", "write the feature vector and per-layer spectrograms");
    scatter_cmd->add_option("--input", o.input_wav, "mono WAV input instead of the configured tones");
    app.add_subcommand("verify", "run the bound verification suite");
    app.add_subcommand("figures", "reproduce the three two-tone figure experiments");
    auto* fb = app.add_subcommand("framebounds", "print frame bounds (A, B) per layer");
    fb->add_option("--length", o.length, "layer-1 signal length (default: first tone)");

    std::ostringstream cli_out, cli_err;
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, cli_out, cli_err);
        out << cli_out.str();
        err << cli_err.str();
        return code == 0 ? ok : bad_arguments;
    }
    o.subcommand = app.get_subcommands().front()->get_name();

    try {
        if (o.subcommand == "synth") return cmd_synth(o, out);
        if (o.subcommand == "scatter") return cmd_scatter(o, out);
        if (o.subcommand == "verify") return cmd_verify(o, out);
        if (o.subcommand == "figures") return cmd_figures(o, out);
        return cmd_framebounds(o, out);
    } catch (const io_error& e) {
        err << "gscat: " << e.what() << '\n';
        return io_failure;
    } catch (const format_error& e) {
        err << "gscat: " << e.what() << '\n';
        return io_failure;
    } catch (const numerical_failure& e) {
        err << "gscat: " << e.what() << " (partial estimates A=" << e.lower_estimate()
            << ", B=" << e.upper_estimate() << ")\n";
        return failure;
    } catch (const error& e) {
        err << "gscat: " << e.what() << '\n';
        return bad_arguments;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "gscat: " << e.what() << '\n';
        return io_failure;
    } catch (const std::exception& e) {
        err << "gscat: internal error: " << e.what() << '\n';
        return failure;
    }
}

} // namespace gscat::cli
