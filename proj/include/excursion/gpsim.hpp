// Stationary Gaussian trajectories (circulant embedding, spectral synthesis),
// level-crossing extraction and trajectory-based persistency estimates.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>
#include <mutex>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <fftw3.h>

#include "excursion/covariance.hpp"
#include "excursion/errors.hpp"
#include "excursion/parallel.hpp"
#include "excursion/persistency.hpp"

namespace excursion {

struct Trajectory {
    double dt = 0.0;
    std::vector<double> values;
    std::string model;
    std::uint64_t seed = 0;
};

namespace detail {

// FFTW planning is not thread safe; execution of an existing plan is.
inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

struct FftwBuffer {
    fftw_complex* data = nullptr;
    explicit FftwBuffer(std::size_t n) : data(fftw_alloc_complex(n)) {
        if (!data) throw std::bad_alloc();
    }
    ~FftwBuffer() { fftw_free(data); }
    FftwBuffer(const FftwBuffer&) = delete;
    FftwBuffer& operator=(const FftwBuffer&) = delete;
};

class FftPlan {
public:
    FftPlan(std::size_t n, int sign) : n_(n) {
        FftwBuffer scratch(n);
        std::lock_guard lock(fftw_planner_mutex());
        plan_ = fftw_plan_dft_1d(static_cast<int>(n), scratch.data, scratch.data, sign, FFTW_ESTIMATE);
        if (!plan_) throw NumericalError("fftw: plan creation failed");
    }
    ~FftPlan() {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(plan_);
    }
    FftPlan(const FftPlan&) = delete;
    FftPlan& operator=(const FftPlan&) = delete;

    // In-place transform of an fftw_alloc'd buffer of size n.
    void execute(fftw_complex* buf) const { fftw_execute_dft(plan_, buf, buf); }
    std::size_t size() const noexcept { return n_; }

private:
    std::size_t n_;
    fftw_plan plan_ = nullptr;
};

inline std::size_t next_pow2(std::size_t n) {
    std::size_t m = 1;
    while (m < n) m <<= 1;
    return m;
}

}  // namespace detail

/// Exact simulation of r(k dt), k = 0..n-1, by embedding the covariance in a
/// circulant matrix of power-of-two size M >= 2(n-1). One FFT yields two
/// independent trajectories (real and imaginary parts).
class CirculantEmbedding {
public:
    CirculantEmbedding(const CovarianceModel& model, double dt, std::size_t n)
        : dt_(dt), n_(n), model_name_(model.name) {
        if (!(dt > 0.0)) throw DomainError("simulate_gp: dt must be positive");
        if (n < 2) throw DomainError("simulate_gp: need at least two points");
        const std::size_t m = detail::next_pow2(2 * (n - 1));
        plan_ = std::make_shared<detail::FftPlan>(m, FFTW_FORWARD);
        detail::FftwBuffer buf(m);
        for (std::size_t j = 0; j < m; ++j) {
            buf.data[j][0] = model.r(static_cast<double>(std::min(j, m - j)) * dt);
            buf.data[j][1] = 0.0;
        }
        plan_->execute(buf.data);
        double trace = 0.0, negative = 0.0;
        scale_.resize(m);
        for (std::size_t j = 0; j < m; ++j) {
            const double lam = buf.data[j][0];
            trace += std::abs(lam);
            if (lam < 0.0) negative -= lam;
            scale_[j] = std::sqrt(std::max(lam, 0.0) / static_cast<double>(m));
        }
        if (negative > 1e-8 * trace)
            throw NumericalError("circulant embedding: negative eigenvalue mass " + std::to_string(negative) +
                                 " exceeds 1e-8 of the trace; use a larger embedding or smaller dt");
    }

    std::size_t length() const noexcept { return n_; }
    std::size_t embedding_size() const noexcept { return scale_.size(); }
    double dt() const noexcept { return dt_; }

    std::pair<Trajectory, Trajectory> generate_pair(std::uint64_t seed) const {
        const std::size_t m = scale_.size();
        Rng rng = make_rng(seed);
        std::normal_distribution<double> normal;
        detail::FftwBuffer buf(m);
        for (std::size_t j = 0; j < m; ++j) {
            buf.data[j][0] = scale_[j] * normal(rng);
            buf.data[j][1] = scale_[j] * normal(rng);
        }
        plan_->execute(buf.data);
        Trajectory a{dt_, std::vector<double>(n_), model_name_, seed};
        Trajectory b{dt_, std::vector<double>(n_), model_name_, seed};
        for (std::size_t j = 0; j < n_; ++j) {
            a.values[j] = buf.data[j][0];
            b.values[j] = buf.data[j][1];
        }
        return {std::move(a), std::move(b)};
    }

private:
    double dt_;
    std::size_t n_;
    std::string model_name_;
    std::vector<double> scale_;
    std::shared_ptr<detail::FftPlan> plan_;
};

inline Trajectory simulate_gp(const CovarianceModel& model, double dt, std::size_t n, std::uint64_t seed) {
    return CirculantEmbedding(model, dt, n).generate_pair(seed).first;
}

/// `count` trajectories; pair p = derive_seed(seed, p) supplies trajectories 2p and 2p+1.
inline std::vector<Trajectory> simulate_gp_batch(const CirculantEmbedding& sim, std::size_t count,
                                                 std::uint64_t seed) {
    std::vector<Trajectory> out(count);
    parallel_for((count + 1) / 2, [&](std::size_t p) {
        auto [a, b] = sim.generate_pair(derive_seed(seed, p));
        out[2 * p] = std::move(a);
        if (2 * p + 1 < count) out[2 * p + 1] = std::move(b);
    });
    return out;
}

/// Random-amplitude spectral synthesis from the spectral density S(omega) on
/// the Fourier grid omega_k = 2 pi k / (M dt), M a power of two >= 2n.
/// The result is periodic with period M dt, so the covariance is matched up
/// to the discretization of the spectrum.
inline Trajectory simulate_gp_spectral(const CovarianceModel& model, double dt, std::size_t n,
                                       std::uint64_t seed) {
    if (!model.spectrum) throw DomainError("simulate_gp_spectral: model has no spectrum");
    if (!(dt > 0.0) || n < 2) throw DomainError("simulate_gp_spectral: need dt > 0 and n >= 2");
    const std::size_t m = detail::next_pow2(2 * n);
    const double dw = 2.0 * std::numbers::pi / (static_cast<double>(m) * dt);
    const auto& S = *model.spectrum;
    Rng rng = make_rng(seed);
    std::normal_distribution<double> normal;
    detail::FftwBuffer buf(m);
    for (std::size_t k = 0; k < m; ++k) {
        buf.data[k][0] = 0.0;
        buf.data[k][1] = 0.0;
    }
    // Two-sided density folded onto k = 0..M/2.
    for (std::size_t k = 0; k <= m / 2; ++k) {
        const double w = static_cast<double>(k) * dw;
        const double weight = (k == 0 || k == m / 2) ? S(w) * dw : 2.0 * S(w) * dw;
        const double amp = std::sqrt(weight);
        buf.data[k][0] = amp * normal(rng);
        buf.data[k][1] = amp * normal(rng);
    }
    detail::FftPlan plan(m, FFTW_BACKWARD);
    plan.execute(buf.data);
    Trajectory traj{dt, std::vector<double>(n), model.name, seed};
    for (std::size_t j = 0; j < n; ++j) traj.values[j] = buf.data[j][0];
    return traj;
}

// ---------------------------------------------------------------------------
// Excursions
// ---------------------------------------------------------------------------

struct ExcursionSet {
    std::vector<double> above_lengths;
    std::vector<double> below_lengths;
    double level = 0.0;
    std::size_t crossing_count = 0;
};

/// Number of sign changes of x - u between consecutive samples.
inline std::size_t count_crossings(const std::vector<double>& values, double u) {
    std::size_t count = 0;
    for (std::size_t j = 1; j < values.size(); ++j)
        if ((values[j - 1] > u) != (values[j] > u)) ++count;
    return count;
}

/// Complete excursion lengths above and below u, with crossing instants located
/// by linear interpolation. Boundary intervals are discarded.
inline ExcursionSet extract_excursions(const std::vector<double>& values, double dt, double u) {
    ExcursionSet set;
    set.level = u;
    double last = -1.0;
    bool have_last = false;
    for (std::size_t j = 1; j < values.size(); ++j) {
        const bool was_above = values[j - 1] > u;
        if (was_above == (values[j] > u)) continue;
        const double frac = (u - values[j - 1]) / (values[j] - values[j - 1]);
        const double tau = (static_cast<double>(j - 1) + frac) * dt;
        ++set.crossing_count;
        if (have_last && tau > last) (was_above ? set.above_lengths : set.below_lengths).push_back(tau - last);
        last = tau;
        have_last = true;
    }
    if (set.above_lengths.empty() && set.below_lengths.empty())
        throw EmptyExcursionSet("extract_excursions: no complete excursion at level " + std::to_string(u));
    return set;
}

inline ExcursionSet extract_excursions(const Trajectory& traj, double u) {
    return extract_excursions(traj.values, traj.dt, u);
}

/// Mean number of u-level crossings per unit time of a stationary standard Gaussian process.
inline double rice_crossing_rate(const CovarianceModel& model, double u) {
    return std::sqrt(model.lambda2()) / std::numbers::pi * std::exp(-0.5 * u * u);
}

// ---------------------------------------------------------------------------
// Trajectory-based persistency
// ---------------------------------------------------------------------------

struct TrajectoryEstimate {
    double level = 0.0;
    BatchEstimate above;
    BatchEstimate below;
    double crossing_rate = 0.0;
    std::size_t n_above = 0;
    std::size_t n_below = 0;
};

struct TrajectoryProtocol {
    std::size_t n_traj = 1000;
    std::size_t traj_len = 10000;
    double dt = 0.05;
    std::size_t reps = 10;
    std::size_t min_tail_count = 50;
};

/// Replicate r simulates n_traj trajectories from derive_seed(seed, r), pools
/// the excursion lengths per level and fits both sides. All levels share the
/// same trajectories. crossing_rate is the pooled empirical rate over all replicates.
inline std::vector<TrajectoryEstimate> persistency_from_trajectories(const CovarianceModel& model,
                                                                     const std::vector<double>& levels,
                                                                     const TrajectoryProtocol& proto,
                                                                     std::uint64_t seed) {
    if (levels.empty()) throw DomainError("persistency_from_trajectories: no levels");
    if (proto.reps < 2) throw DomainError("persistency_from_trajectories: reps must be >= 2");
    if (proto.n_traj < 1) throw DomainError("persistency_from_trajectories: n_traj must be positive");
    const CirculantEmbedding sim(model, proto.dt, proto.traj_len);
    const std::size_t nl = levels.size();
    std::vector<std::vector<SurvivalFit>> fits_above(nl), fits_below(nl);
    std::vector<std::size_t> crossings(nl, 0), n_above(nl, 0), n_below(nl, 0);

    for (std::size_t r = 0; r < proto.reps; ++r) {
        std::vector<std::vector<double>> above(nl), below(nl);
        std::vector<std::vector<ExcursionSet>> per_traj(proto.n_traj, std::vector<ExcursionSet>(nl));
        const std::uint64_t rep_seed = derive_seed(seed, r);
        parallel_for((proto.n_traj + 1) / 2, [&](std::size_t p) {
            auto pair = sim.generate_pair(derive_seed(rep_seed, p));
            for (std::size_t half = 0; half < 2; ++half) {
                const std::size_t idx = 2 * p + half;
                if (idx >= proto.n_traj) break;
                const auto& values = half == 0 ? pair.first.values : pair.second.values;
                for (std::size_t l = 0; l < nl; ++l) {
                    try {
                        per_traj[idx][l] = extract_excursions(values, proto.dt, levels[l]);
                    } catch (const EmptyExcursionSet&) {
                        per_traj[idx][l] = ExcursionSet{{}, {}, levels[l], count_crossings(values, levels[l])};
                    }
                }
            }
        });
        for (std::size_t l = 0; l < nl; ++l) {
            for (auto& t : per_traj) {
                above[l].insert(above[l].end(), t[l].above_lengths.begin(), t[l].above_lengths.end());
                below[l].insert(below[l].end(), t[l].below_lengths.begin(), t[l].below_lengths.end());
                crossings[l] += t[l].crossing_count;
            }
            if (above[l].empty() || below[l].empty())
                throw EmptyExcursionSet("persistency_from_trajectories: no complete excursions at level " +
                                        std::to_string(levels[l]));
            n_above[l] += above[l].size();
            n_below[l] += below[l].size();
            try {
                fits_above[l].push_back(fit_persistency(std::move(above[l]), proto.min_tail_count));
                fits_below[l].push_back(fit_persistency(std::move(below[l]), proto.min_tail_count));
            } catch (const FitError& e) {
                throw FitError(std::string(e.what()) + " (replicate " + std::to_string(r) + ")",
                               static_cast<long>(r));
            }
        }
    }

    const double total_time = static_cast<double>(proto.reps) * static_cast<double>(proto.n_traj) *
                              static_cast<double>(proto.traj_len - 1) * proto.dt;
    std::vector<TrajectoryEstimate> out;
    for (std::size_t l = 0; l < nl; ++l) {
        TrajectoryEstimate est;
        est.level = levels[l];
        est.above = summarize(std::move(fits_above[l]));
        est.below = summarize(std::move(fits_below[l]));
        est.crossing_rate = static_cast<double>(crossings[l]) / total_time;
        est.n_above = n_above[l];
        est.n_below = n_below[l];
        out.push_back(std::move(est));
    }
    return out;
}

inline TrajectoryEstimate persistency_from_trajectories(const CovarianceModel& model, double u,
                                                        const TrajectoryProtocol& proto, std::uint64_t seed) {
    return persistency_from_trajectories(model, std::vector<double>{u}, proto, seed).front();
}

}  // namespace excursion
