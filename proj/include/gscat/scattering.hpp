#pragma once

// Gabor scattering: cascades of (Gabor analysis -> modulus) with one output
// atom per layer. Layer l (1-based) analyses with frames()[l - 1]; the output
// atom for signals entering that frame is its atom at atom_channel, so a
// sequence of d + 1 frames supports features up to depth d.

#include "gscat/errors.hpp"
#include "gscat/gabor.hpp"

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace gscat {

enum class Nonlinearity { modulus };

using Path = std::vector<std::uint32_t>;

struct LayerSpec {
    Window window;
    std::size_t time_step = 1;
    std::size_t channels = 1;
    std::size_t atom_channel = 0;
};

struct Layer {
    GaborFrame frame;
    Nonlinearity nonlinearity = Nonlinearity::modulus;
    std::size_t atom_channel = 0;
    double upper_bound = 0.0;     // frame bound B after scaling
    double output_norm_sq = 0.0;  // ||smoothing operator||^2 after scaling
};

/// ||x -> (x * phi)(a m)||^2 for the frame atom at `channel`:
/// max_nu (1/a) sum_p |Phi^[nu + p L/a]|^2.
inline double output_operator_norm_sq(const GaborFrame& frame, std::size_t channel) {
    cvec phi = frame.atom(channel);
    fft_forward(phi);
    const std::size_t a = frame.time_step();
    const std::size_t sub = frame.frames();
    double best = 0.0;
    for (std::size_t nu = 0; nu < sub; ++nu) {
        double acc = 0.0;
        for (std::size_t p = 0; p < a; ++p) acc += std::norm(phi[nu + p * sub]);
        best = std::max(best, acc / static_cast<double>(a));
    }
    return best;
}

class TripletSequence {
public:
    /// Builds frames on the lengths implied by the cascade L_l = L_{l-1} / a_{l-1}.
    /// With `normalize`, each window is scaled so that B + ||smoothing||^2 <= 1,
    /// which keeps the whole feature map non-expansive.
    static TripletSequence build(std::span<const LayerSpec> specs, std::size_t input_length,
                                 bool normalize = true) {
        if (specs.empty()) throw invalid_argument("a triplet sequence needs at least one layer");
        TripletSequence seq;
        seq.normalized_ = normalize;
        std::size_t len = input_length;
        for (std::size_t i = 0; i < specs.size(); ++i) {
            const LayerSpec& spec = specs[i];
            if (spec.atom_channel >= spec.channels)
                throw invalid_argument("output atom channel " + std::to_string(spec.atom_channel) +
                                       " out of range for layer " + std::to_string(i + 1));
            GaborFrame frame(spec.window, spec.time_step, spec.channels, len);
            FrameBounds fb = frame_bounds(frame);
            double out_sq = output_operator_norm_sq(frame, spec.atom_channel);
            if (normalize) {
                if (!(fb.lower > 1e-12 * fb.upper))
                    throw not_a_frame("layer " + std::to_string(i + 1) + " frame " + frame.id() +
                                      " has lower frame bound 0");
                const double c2 = (1.0 - 1e-10) / (fb.upper + out_sq);
                frame = frame.with_window(spec.window.scaled(std::sqrt(c2)));
                fb.upper *= c2;
                out_sq *= c2;
            }
            seq.layers_.push_back(Layer{frame, Nonlinearity::modulus, spec.atom_channel, fb.upper, out_sq});
            len = frame.frames();
        }
        return seq;
    }

    const std::vector<Layer>& layers() const noexcept { return layers_; }
    const GaborFrame& frame(std::size_t index) const { return layers_.at(index).frame; }
    std::size_t size() const noexcept { return layers_.size(); }
    std::size_t max_depth() const noexcept { return layers_.size() - 1; }
    std::size_t input_length() const { return layers_.front().frame.signal_length(); }
    bool normalized() const noexcept { return normalized_; }

    /// Every layer satisfies B + ||smoothing||^2 <= 1 + tol.
    bool is_contractive(double tol = 1e-9) const {
        for (const auto& l : layers_)
            if (l.upper_bound + l.output_norm_sq > 1.0 + tol) return false;
        return true;
    }

    std::string id() const {
        std::string s;
        for (const auto& l : layers_) {
            if (!s.empty()) s += "|";
            s += l.frame.id() + "-c" + std::to_string(l.atom_channel);
        }
        return s;
    }

private:
    std::vector<Layer> layers_;
    bool normalized_ = false;
};

/// U[j] x (k) = |<x, M_j T_{ak} g>| for every channel j.
inline MagnitudeGrid layer_forward(std::span<const std::complex<double>> input, const GaborFrame& frame,
                                   std::size_t layer = 1) {
    return modulus(dgt(input, frame, layer));
}

inline MagnitudeGrid layer_forward(std::span<const double> input, const GaborFrame& frame, std::size_t layer = 1) {
    return modulus(dgt(input, frame, layer));
}

/// |(x * phi)(a m)| with phi the frame atom at `channel`, circular convolution.
template <class Sample>
rvec smooth(std::span<const Sample> input, const GaborFrame& frame, std::size_t channel) {
    const std::size_t len = frame.signal_length();
    if (input.size() != len)
        throw invalid_argument("smoothing input length " + std::to_string(input.size()) +
                               " does not match frame length " + std::to_string(len));
    const Window& w = frame.window();
    const long c = static_cast<long>(w.center());
    cvec taps(w.length());
    for (std::size_t s = 0; s < w.length(); ++s)
        taps[s] = w[s] * frame.modulation(channel, static_cast<long>(s) - c);
    rvec out(frame.frames());
    for (std::size_t m = 0; m < out.size(); ++m) {
        std::complex<double> acc{};
        const long base = static_cast<long>(frame.time_step() * m);
        for (std::size_t s = 0; s < taps.size(); ++s)
            acc += taps[s] * input[frame.wrap(base - (static_cast<long>(s) - c))];
        out[m] = std::abs(acc);
    }
    return out;
}

struct ScatterOptions {
    std::size_t node_budget = 4'000'000;
    // Nodes whose energy falls below prune_threshold * ||f||^2 are kept but
    // not expanded further. 0 keeps everything.
    double prune_threshold = 0.0;
};

struct ScatterTree {
    std::map<Path, rvec> nodes; // U[q] f for 1 <= |q| <= depth
    std::vector<Path> pruned;
    std::size_t depth = 0;
};

namespace detail {

inline double energy(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return s;
}

inline double energy(std::span<const std::complex<double>> x) {
    double s = 0.0;
    for (const auto& v : x) s += std::norm(v);
    return s;
}

} // namespace detail

/// Breadth-first evaluation of every path of length <= depth.
inline ScatterTree scatter(std::span<const std::complex<double>> signal, const TripletSequence& omega,
                           std::size_t depth, const ScatterOptions& opt = {}) {
    if (depth > omega.size())
        throw invalid_argument("depth " + std::to_string(depth) + " exceeds the " +
                               std::to_string(omega.size()) + " layers of the triplet sequence");
    if (signal.size() != omega.input_length())
        throw invalid_argument("signal length " + std::to_string(signal.size()) +
                               " does not match layer-1 frame length " + std::to_string(omega.input_length()));
    ScatterTree tree;
    tree.depth = depth;
    if (depth == 0) return tree;

    const double floor = opt.prune_threshold * detail::energy(signal);
    std::size_t total = omega.frame(0).channels();
    if (total > opt.node_budget)
        throw resource_limit("scatter node budget " + std::to_string(opt.node_budget) + " exceeded at layer 1", 1);

    std::vector<Path> frontier;
    {
        MagnitudeGrid grid = layer_forward(signal, omega.frame(0), 1);
        for (std::size_t j = 0; j < grid.channels(); ++j) {
            Path q{static_cast<std::uint32_t>(j)};
            auto row = grid.row(j);
            tree.nodes.emplace(q, rvec(row.begin(), row.end()));
            frontier.push_back(std::move(q));
        }
    }
    for (std::size_t level = 2; level <= depth; ++level) {
        const GaborFrame& frame = omega.frame(level - 1);
        std::vector<Path> expand;
        for (const auto& q : frontier) {
            if (opt.prune_threshold > 0.0 && detail::energy(tree.nodes.at(q)) < floor) {
                tree.pruned.push_back(q);
                continue;
            }
            expand.push_back(q);
        }
        total += expand.size() * frame.channels();
        if (total > opt.node_budget)
            throw resource_limit("scatter node budget " + std::to_string(opt.node_budget) + " exceeded at layer " +
                                     std::to_string(level) + " (" + std::to_string(total) + " nodes)",
                                 level);
        std::vector<Path> next;
        next.reserve(expand.size() * frame.channels());
        for (const auto& q : expand) {
            MagnitudeGrid grid = layer_forward(std::span<const double>(tree.nodes.at(q)), frame, level);
            for (std::size_t j = 0; j < grid.channels(); ++j) {
                Path child = q;
                child.push_back(static_cast<std::uint32_t>(j));
                auto row = grid.row(j);
                tree.nodes.emplace(child, rvec(row.begin(), row.end()));
                next.push_back(std::move(child));
            }
        }
        frontier = std::move(next);
    }
    return tree;
}

struct FeatureVector {
    std::map<Path, rvec> entries; // (U[q] f) * phi_{|q|}, subsampled
    std::size_t depth = 0;
    std::vector<Lattice> lattices; // frames 1 .. depth + 1
    std::size_t input_length = 0;
    std::string omega_id;
    std::vector<Path> pruned;

    bool operator==(const FeatureVector& o) const {
        if (depth != o.depth || input_length != o.input_length || omega_id != o.omega_id ||
            entries != o.entries || pruned != o.pruned || lattices.size() != o.lattices.size())
            return false;
        for (std::size_t i = 0; i < lattices.size(); ++i)
            if (lattices[i].time_step != o.lattices[i].time_step || lattices[i].channels != o.lattices[i].channels)
                return false;
        return true;
    }
};

inline FeatureVector extract_features(std::span<const std::complex<double>> signal, const TripletSequence& omega,
                                      std::size_t depth, const ScatterOptions& opt = {}) {
    if (depth + 1 > omega.size())
        throw invalid_argument("depth " + std::to_string(depth) + " needs " + std::to_string(depth + 1) +
                               " frames, the triplet sequence has " + std::to_string(omega.size()));
    ScatterTree tree = scatter(signal, omega, depth, opt);
    FeatureVector fv;
    fv.depth = depth;
    fv.input_length = signal.size();
    fv.omega_id = omega.id();
    fv.pruned = tree.pruned;
    for (std::size_t i = 0; i <= depth; ++i) fv.lattices.push_back(omega.frame(i).lattice());

    const Layer& first = omega.layers().front();
    fv.entries.emplace(Path{}, smooth(signal, first.frame, first.atom_channel));
    for (const auto& [q, node] : tree.nodes) {
        const Layer& next = omega.layers().at(q.size());
        fv.entries.emplace(q, smooth(std::span<const double>(node), next.frame, next.atom_channel));
    }
    return fv;
}

inline double feature_norm(const FeatureVector& u) {
    double s = 0.0;
    for (const auto& [q, v] : u.entries) s += detail::energy(v);
    return std::sqrt(s);
}

inline double feature_distance(const FeatureVector& u, const FeatureVector& v) {
    if (u.entries.size() != v.entries.size() || u.omega_id != v.omega_id)
        throw invalid_argument("feature vectors come from different triplet sequences or path sets");
    double s = 0.0;
    auto it = v.entries.begin();
    for (const auto& [q, a] : u.entries) {
        if (it->first != q || it->second.size() != a.size())
            throw invalid_argument("feature vectors have mismatched path sets");
        for (std::size_t i = 0; i < a.size(); ++i) {
            double d = a[i] - it->second[i];
            s += d * d;
        }
        ++it;
    }
    return std::sqrt(s);
}

} // namespace gscat
