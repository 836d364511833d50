#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace waitflow {

/// Matrix of MCMC draws (rows) by named parameters (columns), with the
/// chain and iteration each row came from. Rows are kept in chain order.
class PosteriorDraws {
public:
    PosteriorDraws() = default;
    explicit PosteriorDraws(std::vector<std::string> names);

    //! Throws DataError on a wrong-length or non-finite row.
    void append(int chain, int iter, std::span<const double> row);

    std::size_t size() const noexcept { return chains_.size(); }
    std::size_t dim() const noexcept { return names_.size(); }
    bool empty() const noexcept { return chains_.empty(); }
    const std::vector<std::string>& names() const noexcept { return names_; }

    std::optional<std::size_t> find(std::string_view name) const;
    //! Column index of \p name; throws DataError when absent.
    std::size_t index(std::string_view name) const;

    std::span<const double> row(std::size_t r) const;
    double value(std::size_t r, std::size_t c) const { return values_[r * names_.size() + c]; }
    int chain(std::size_t r) const { return chains_[r]; }
    int iter(std::size_t r) const { return iters_[r]; }

    std::vector<double> column(std::size_t c) const;
    std::vector<double> column(std::string_view name) const { return column(index(name)); }
    double mean(std::size_t c) const;
    double mean(std::string_view name) const { return mean(index(name)); }

    //! Distinct chain ids in first-appearance order.
    std::vector<int> chain_ids() const;
    //! Column \p c split by chain, in chain_ids() order.
    std::vector<std::vector<double>> by_chain(std::size_t c) const;

    bool operator==(const PosteriorDraws&) const = default;

private:
    std::vector<std::string> names_;
    std::vector<int> chains_;
    std::vector<int> iters_;
    std::vector<double> values_;
};

enum class Support { Real, Positive };

enum class ProposalKind { Coordinate, Joint };

struct McmcConfig {
    int chains = 4;
    int warmup_iters = 2000;
    int keep_iters = 5000;
    int thin = 1;
    //! Unset: 0.44 for coordinate-wise, 0.234 for joint proposals.
    std::optional<double> target_accept;
    ProposalKind proposal = ProposalKind::Coordinate;
    std::uint64_t seed = 1;
    int adapt_window = 50;
    //! Initial proposal scale on the unconstrained axis.
    double initial_scale = 0.1;
    //! Per-chain jitter of the starting point on the unconstrained axis.
    double init_jitter = 0.05;
    bool parallel = true;

    double resolved_target() const;
    //! Throws ConfigError.
    void validate() const;
};

struct ParamSpec {
    std::string name;
    Support support = Support::Real;
};

//! Log density (up to a constant) on the constrained parameter vector.
using LogDensity = std::function<double(std::span<const double>)>;

struct Diagnostics {
    std::vector<std::string> names;
    std::vector<double> rhat; // NaN when only one chain ran
    std::vector<double> ess;
    //! [chain][param] post-warmup acceptance rate (joint: same value for every param).
    std::vector<std::vector<double>> accept_rate;

    double max_rhat() const;
    double min_ess() const;
};

struct SampleResult {
    PosteriorDraws draws;
    Diagnostics diagnostics;
};

/// Adaptive random-walk Metropolis.
///
/// Positive coordinates are sampled as log x with the log-Jacobian added, so
/// the target is never evaluated outside its support. Proposal scales adapt
/// over the warmup in windows of cfg.adapt_window and are frozen afterwards;
/// only post-warmup draws are returned. Chains use independent RNG streams
/// derived from (seed, chain id) and are merged in chain order.
SampleResult sample(const LogDensity& log_target, std::span<const ParamSpec> params,
                    std::span<const double> init, const McmcConfig& cfg);

//! Split-chain potential scale reduction. Needs >= 2 chains of >= 4 draws.
double split_rhat(const std::vector<std::vector<double>>& chains);
//! Multi-chain effective sample size (Geyer initial monotone sequence), capped at the draw count.
double effective_sample_size(const std::vector<std::vector<double>>& chains);

std::vector<double> split_rhat(const PosteriorDraws& draws);
std::vector<double> effective_sample_size(const PosteriorDraws& draws);

} // namespace waitflow
