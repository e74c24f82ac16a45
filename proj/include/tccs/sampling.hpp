#pragma once

#include "tccs/error.hpp"
#include "tccs/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <tuple>
#include <vector>

namespace tccs {

// ---------------------------------------------------------------------------
// Random numbers
// ---------------------------------------------------------------------------

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
}

/// Counter-based generator: the n-th draw (n = 0, 1, ...) of stream s under
/// seed k is
///
///     mix64(k + 0x9E3779B97F4A7C15 * (n + 1) + 0xD1B54A32D192ED03 * s)
///
/// with mix64 the SplitMix64 finalizer. A uniform double is the top 53 bits
/// scaled by 2^-53; a Gaussian is Box-Muller (cosine branch) of the next two
/// uniforms u1, u2 as sqrt(-2 ln(1 - u1)) * cos(2 pi u2). These formulas are
/// the whole contract, so masks and tensors can be regenerated from a seed in
/// any language.
class CounterRng {
public:
    constexpr explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0) noexcept
        : seed_(seed), stream_(stream) {}

    constexpr std::uint64_t next() noexcept {
        ++counter_;
        return mix64(seed_ + 0x9E3779B97F4A7C15ULL * counter_ + 0xD1B54A32D192ED03ULL * stream_);
    }

    /// Uniform in [0, 1).
    constexpr double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n).
    constexpr std::size_t index(std::size_t n) noexcept {
        const auto v = static_cast<std::size_t>(uniform() * static_cast<double>(n));
        return std::min(v, n - 1);
    }

    double normal() noexcept {
        const double u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(1.0 - u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    [[nodiscard]] constexpr std::uint64_t seed() const noexcept { return seed_; }
    [[nodiscard]] constexpr std::uint64_t stream() const noexcept { return stream_; }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t counter_ = 0;
};

/// Seed of an independent generator for (master, cell, trial).
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t cell, std::uint64_t trial) noexcept {
    return mix64(master ^ mix64(0x2545F4914F6CDD1DULL * (cell + 1) ^ mix64(0x9E3779B97F4A7C15ULL * (trial + 1))));
}

// ---------------------------------------------------------------------------
// Observation sets
// ---------------------------------------------------------------------------

struct Observation {
    std::uint32_t i = 0;
    std::uint32_t j = 0;
    std::uint32_t k = 0;
    double value = 0.0;

    [[nodiscard]] auto key() const noexcept { return std::tie(k, i, j); }
    friend bool operator==(const Observation&, const Observation&) = default;
};

/// Observed coordinates, sorted k-major then i then j.
struct ObservationSet {
    Dims dims{};
    std::vector<Observation> entries;
    bool dedup = true;
    bool has_values = false;

    [[nodiscard]] std::size_t size() const noexcept { return entries.size(); }

    /// Throws ParameterError on out-of-range or (when dedup is set) repeated
    /// coordinates, and on an unsorted list.
    void validate() const {
        for (std::size_t n = 0; n < entries.size(); ++n) {
            const auto& e = entries[n];
            if (e.i >= dims.n1 || e.j >= dims.n2 || e.k >= dims.n3) {
                throw ParameterError("observation (" + std::to_string(e.i) + "," + std::to_string(e.j) + "," +
                                     std::to_string(e.k) + ") outside " + to_string(dims));
            }
            if (n > 0) {
                const auto& p = entries[n - 1];
                if (e.key() < p.key()) throw ParameterError("observations are not sorted (k, i, j)");
                if (dedup && e.key() == p.key()) {
                    throw ParameterError("duplicate observation (" + std::to_string(e.i) + "," +
                                         std::to_string(e.j) + "," + std::to_string(e.k) + ")");
                }
            }
        }
    }

    friend bool operator==(const ObservationSet& a, const ObservationSet& b) {
        return a.dims == b.dims && a.entries == b.entries && a.dedup == b.dedup && a.has_values == b.has_values;
    }
};

/// Sorted coordinate union; shared coordinates keep the value from `a`.
inline ObservationSet merge_union(const ObservationSet& a, const ObservationSet& b) {
    if (a.dims != b.dims) throw ShapeError("merge_union: " + to_string(a.dims) + " vs " + to_string(b.dims));
    ObservationSet out{a.dims, {}, true, a.has_values && b.has_values};
    out.entries.reserve(a.size() + b.size());
    std::size_t p = 0, q = 0;
    while (p < a.size() || q < b.size()) {
        if (q == b.size() || (p < a.size() && a.entries[p].key() < b.entries[q].key())) {
            out.entries.push_back(a.entries[p++]);
        } else if (p == a.size() || b.entries[q].key() < a.entries[p].key()) {
            out.entries.push_back(b.entries[q++]);
        } else {
            out.entries.push_back(a.entries[p++]);
            ++q;
        }
    }
    return out;
}

/// Every coordinate kept independently with probability p.
inline ObservationSet bernoulli_mask(Dims dims, double p, CounterRng& rng) {
    if (!(p >= 0.0 && p <= 1.0)) throw ParameterError("bernoulli_mask: p = " + std::to_string(p) + " not in [0, 1]");
    ObservationSet out{dims, {}, true, false};
    for (std::size_t k = 0; k < dims.n3; ++k) {
        for (std::size_t i = 0; i < dims.n1; ++i) {
            for (std::size_t j = 0; j < dims.n2; ++j) {
                if (rng.uniform() < p) {
                    out.entries.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j),
                                           static_cast<std::uint32_t>(k), 0.0});
                }
            }
        }
    }
    return out;
}

/// P_Omega(t): t on observed coordinates, zero elsewhere.
inline DenseTensor3 project(const DenseTensor3& t, const ObservationSet& omega) {
    if (t.dims() != omega.dims) throw ShapeError("project: " + to_string(t.dims()) + " vs " + to_string(omega.dims));
    DenseTensor3 out(t.dims());
    for (const auto& e : omega.entries) out(e.i, e.j, e.k) = t(e.i, e.j, e.k);
    return out;
}

/// Observation values scattered into a dense tensor (zero elsewhere).
inline DenseTensor3 scatter(const ObservationSet& omega) {
    DenseTensor3 out(omega.dims);
    for (const auto& e : omega.entries) out(e.i, e.j, e.k) = e.value;
    return out;
}

// ---------------------------------------------------------------------------
// Cross-concentrated sampling
// ---------------------------------------------------------------------------

/// Selected slabs I (rows) and J (columns) plus the Bernoulli observations
/// drawn inside each slab, in global coordinates.
struct CcsPlan {
    Dims dims{};
    IndexSet I;
    IndexSet J;
    ObservationSet omega_R;
    ObservationSet omega_C;
    double p_R = 0.0;
    double p_C = 0.0;
    std::uint64_t seed = 0;
    bool with_replacement = false;

    [[nodiscard]] bool has_values() const noexcept { return omega_R.has_values && omega_C.has_values; }

    /// |I| / n1 (equal to |J| / n2 for symmetric plans).
    [[nodiscard]] double delta() const noexcept {
        return dims.n1 == 0 ? 0.0 : static_cast<double>(I.size()) / static_cast<double>(dims.n1);
    }

    /// Omega_R union Omega_C with the overlap counted once.
    [[nodiscard]] ObservationSet omega() const { return merge_union(omega_R, omega_C); }

    /// Checks the index-set bounds and that every Omega_R (Omega_C) entry lies in a selected row (column).
    void validate() const {
        if (I.bound() != dims.n1 || J.bound() != dims.n2) throw ParameterError("plan index sets do not match dims");
        if (omega_R.dims != dims || omega_C.dims != dims) throw ParameterError("plan observation dims mismatch");
        omega_R.validate();
        omega_C.validate();
        const auto in_i = I.mask();
        const auto in_j = J.mask();
        for (const auto& e : omega_R.entries) {
            if (!in_i[e.i]) throw ParameterError("omega_R entry in row " + std::to_string(e.i) + " outside I");
        }
        for (const auto& e : omega_C.entries) {
            if (!in_j[e.j]) throw ParameterError("omega_C entry in column " + std::to_string(e.j) + " outside J");
        }
    }
};

namespace detail {

/// Sorted draw of `count` indices from [0, n): partial Fisher-Yates without
/// replacement, independent uniform draws with replacement.
inline IndexSet draw_indices(std::size_t n, std::size_t count, bool replacement, CounterRng& rng) {
    std::vector<std::size_t> out;
    if (replacement) {
        if (n == 0 && count > 0) throw ParameterError("cannot draw from an empty range");
        for (std::size_t c = 0; c < count; ++c) out.push_back(rng.index(n));
    } else {
        std::vector<std::size_t> pool(n);
        for (std::size_t q = 0; q < n; ++q) pool[q] = q;
        for (std::size_t c = 0; c < count; ++c) {
            const std::size_t pick = c + rng.index(n - c);
            std::swap(pool[c], pool[pick]);
        }
        out.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(count));
    }
    std::sort(out.begin(), out.end());
    return {std::move(out), n, replacement};
}

inline std::vector<std::size_t> distinct(const IndexSet& s) {
    std::vector<std::size_t> v = s.indices();
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

}  // namespace detail

/// Draws I and J uniformly, then Bernoulli masks with probability p_R on the
/// horizontal slab [T]_{I,:,:} and p_C on the lateral slab [T]_{:,J,:}. The
/// two masks are independent; on the I x J block a coordinate is observed
/// when either mask selects it.
///
/// Draw order (fixed for reproducibility): I, J, then Omega_R over
/// (k, distinct i in I, j), then Omega_C over (k, i, distinct j in J).
inline CcsPlan make_ccs_plan(Dims dims, std::size_t size_I, std::size_t size_J, double p_R, double p_C,
                             bool replacement, CounterRng& rng) {
    if (!replacement && (size_I > dims.n1 || size_J > dims.n2)) {
        throw ParameterError("make_ccs_plan: |I| = " + std::to_string(size_I) + ", |J| = " + std::to_string(size_J) +
                             " exceed " + std::to_string(dims.n1) + " x " + std::to_string(dims.n2) +
                             " without replacement");
    }
    for (double p : {p_R, p_C}) {
        if (!(p >= 0.0 && p <= 1.0)) throw ParameterError("make_ccs_plan: probability " + std::to_string(p) + " not in [0, 1]");
    }
    CcsPlan plan;
    plan.dims = dims;
    plan.p_R = p_R;
    plan.p_C = p_C;
    plan.seed = rng.seed();
    plan.with_replacement = replacement;
    plan.I = detail::draw_indices(dims.n1, size_I, replacement, rng);
    plan.J = detail::draw_indices(dims.n2, size_J, replacement, rng);
    plan.omega_R = {dims, {}, true, false};
    plan.omega_C = {dims, {}, true, false};
    const auto rows = detail::distinct(plan.I);
    const auto cols = detail::distinct(plan.J);
    for (std::size_t k = 0; k < dims.n3; ++k) {
        for (std::size_t i : rows) {
            for (std::size_t j = 0; j < dims.n2; ++j) {
                if (rng.uniform() < p_R) {
                    plan.omega_R.entries.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j),
                                                    static_cast<std::uint32_t>(k), 0.0});
                }
            }
        }
    }
    for (std::size_t k = 0; k < dims.n3; ++k) {
        for (std::size_t i = 0; i < dims.n1; ++i) {
            for (std::size_t j : cols) {
                if (rng.uniform() < p_C) {
                    plan.omega_C.entries.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j),
                                                    static_cast<std::uint32_t>(k), 0.0});
                }
            }
        }
    }
    return plan;
}

/// Fills the plan's observation values from t.
inline CcsPlan capture(const DenseTensor3& t, CcsPlan plan) {
    if (t.dims() != plan.dims) throw ShapeError("capture: " + to_string(t.dims()) + " vs " + to_string(plan.dims));
    for (auto* set : {&plan.omega_R, &plan.omega_C}) {
        for (auto& e : set->entries) e.value = t(e.i, e.j, e.k);
        set->has_values = true;
    }
    return plan;
}

/// |Omega_R union Omega_C| / (n1 n2 n3).
inline double overall_rate(const CcsPlan& plan) {
    const std::size_t total = plan.dims.size();
    if (total == 0) return 0.0;
    return static_cast<double>(plan.omega().size()) / static_cast<double>(total);
}

/// Expected overall rate for distinct index sets of the given sizes
/// (inclusion-exclusion on the slab overlap).
inline double expected_rate(Dims dims, std::size_t size_I, std::size_t size_J, double p_R, double p_C) {
    const double n1 = static_cast<double>(dims.n1), n2 = static_cast<double>(dims.n2);
    const double a = static_cast<double>(size_I), b = static_cast<double>(size_J);
    const double both = 1.0 - (1.0 - p_R) * (1.0 - p_C);
    return (a * (n2 - b) * p_R + (n1 - a) * b * p_C + a * b * both) / (n1 * n2);
}

/// Variance of the overall rate under the same model.
inline double rate_variance(Dims dims, std::size_t size_I, std::size_t size_J, double p_R, double p_C) {
    const double n1 = static_cast<double>(dims.n1), n2 = static_cast<double>(dims.n2), n3 = static_cast<double>(dims.n3);
    const double a = static_cast<double>(size_I), b = static_cast<double>(size_J);
    const double both = 1.0 - (1.0 - p_R) * (1.0 - p_C);
    const double var_count = n3 * (a * (n2 - b) * p_R * (1 - p_R) + (n1 - a) * b * p_C * (1 - p_C) +
                                   a * b * both * (1 - both));
    const double total = n1 * n2 * n3;
    return var_count / (total * total);
}

/// Slab probability p (p_R = p_C = p) that gives overall rate `alpha` for
/// symmetric slabs of the given sizes, clamped to [0, 1].
inline double probability_for_rate(Dims dims, std::size_t size_I, std::size_t size_J, double alpha) {
    // alpha(p) = c1 p + c2 (2p - p^2) with c1 the non-overlap, c2 the overlap fraction.
    const double n1 = static_cast<double>(dims.n1), n2 = static_cast<double>(dims.n2);
    const double a = static_cast<double>(size_I), b = static_cast<double>(size_J);
    const double c1 = (a * (n2 - b) + (n1 - a) * b) / (n1 * n2);
    const double c2 = a * b / (n1 * n2);
    const double lin = c1 + 2.0 * c2;
    if (lin <= 0.0) return 1.0;
    double p;
    if (c2 == 0.0) {
        p = alpha / lin;
    } else {
        const double disc = lin * lin - 4.0 * c2 * alpha;
        if (disc < 0.0) return 1.0;
        p = (lin - std::sqrt(disc)) / (2.0 * c2);
    }
    return std::clamp(p, 0.0, 1.0);
}

}  // namespace tccs
