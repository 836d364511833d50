#include <waitflow/error.hpp>
#include <waitflow/inference.hpp>
#include <waitflow/rng.hpp>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

namespace waitflow {

// ---------------------------------------------------------------------------
// PosteriorDraws

PosteriorDraws::PosteriorDraws(std::vector<std::string> names) : names_(std::move(names)) {}

void PosteriorDraws::append(int chain, int iter, std::span<const double> row) {
    if (row.size() != names_.size()) {
        throw DataError("draw has " + std::to_string(row.size()) + " values, expected " +
                        std::to_string(names_.size()));
    }
    for (double v : row) {
        if (!std::isfinite(v)) {
            throw DataError("non-finite posterior draw (chain " + std::to_string(chain) + ", iter " +
                            std::to_string(iter) + ")");
        }
    }
    chains_.push_back(chain);
    iters_.push_back(iter);
    values_.insert(values_.end(), row.begin(), row.end());
}

std::optional<std::size_t> PosteriorDraws::find(std::string_view name) const {
    auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - names_.begin());
}

std::size_t PosteriorDraws::index(std::string_view name) const {
    if (auto c = find(name)) return *c;
    throw DataError("posterior draws have no parameter '" + std::string(name) + "'");
}

std::span<const double> PosteriorDraws::row(std::size_t r) const {
    return {values_.data() + r * names_.size(), names_.size()};
}

std::vector<double> PosteriorDraws::column(std::size_t c) const {
    std::vector<double> out(size());
    for (std::size_t r = 0; r < size(); ++r) out[r] = value(r, c);
    return out;
}

double PosteriorDraws::mean(std::size_t c) const {
    if (empty()) throw DataError("mean of empty posterior draws");
    double s = 0.0;
    for (std::size_t r = 0; r < size(); ++r) s += value(r, c);
    return s / static_cast<double>(size());
}

std::vector<int> PosteriorDraws::chain_ids() const {
    std::vector<int> ids;
    for (int c : chains_) {
        if (std::find(ids.begin(), ids.end(), c) == ids.end()) ids.push_back(c);
    }
    return ids;
}

std::vector<std::vector<double>> PosteriorDraws::by_chain(std::size_t c) const {
    const auto ids = chain_ids();
    std::vector<std::vector<double>> out(ids.size());
    for (std::size_t r = 0; r < size(); ++r) {
        const auto k = static_cast<std::size_t>(std::find(ids.begin(), ids.end(), chains_[r]) - ids.begin());
        out[k].push_back(value(r, c));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Config

double McmcConfig::resolved_target() const {
    if (target_accept) return *target_accept;
    return proposal == ProposalKind::Coordinate ? 0.44 : 0.234;
}

void McmcConfig::validate() const {
    if (chains < 1) throw ConfigError("mcmc.chains must be >= 1");
    if (warmup_iters < 0) throw ConfigError("mcmc.warmup_iters must be >= 0");
    if (keep_iters < 1) throw ConfigError("mcmc.keep_iters must be >= 1");
    if (thin < 1) throw ConfigError("mcmc.thin must be >= 1");
    if (adapt_window < 1) throw ConfigError("mcmc.adapt_window must be >= 1");
    const double t = resolved_target();
    if (!(t > 0.0 && t < 1.0)) throw ConfigError("mcmc.target_accept must lie in (0, 1)");
    if (!(initial_scale > 0.0)) throw ConfigError("mcmc.initial_scale must be > 0");
    if (!(init_jitter >= 0.0)) throw ConfigError("mcmc.init_jitter must be >= 0");
}

double Diagnostics::max_rhat() const {
    double m = std::numeric_limits<double>::quiet_NaN();
    for (double r : rhat) {
        if (std::isfinite(r) && !(r <= m)) m = r;
    }
    return m;
}

double Diagnostics::min_ess() const {
    double m = std::numeric_limits<double>::infinity();
    for (double e : ess) m = std::min(m, e);
    return m;
}

// ---------------------------------------------------------------------------
// Sampler

namespace {

struct ChainOutput {
    std::vector<double> draws; // kept rows, constrained scale
    std::vector<int> iters;
    std::vector<double> accept_rate;
    std::string error;
};

class Chain {
public:
    Chain(const LogDensity& target, std::span<const ParamSpec> params, const McmcConfig& cfg, int id)
        : target_(target), params_(params), cfg_(cfg), id_(id), dim_(params.size()),
          rng_(make_rng(cfg.seed, "chain", static_cast<std::uint64_t>(id))), z_(dim_), x_(dim_),
          scale_(dim_, cfg.initial_scale) {}

    ChainOutput run(std::span<const double> init) {
        ChainOutput out;
        start(init);
        const int total = cfg_.warmup_iters + cfg_.keep_iters;
        const double target = cfg_.resolved_target();
        std::vector<long> window_acc(dim_, 0), window_try(dim_, 0), warm_acc(dim_, 0);
        std::vector<long> keep_acc(dim_, 0), keep_try(dim_, 0);
        int batch = 0;
        std::vector<std::vector<double>> history; // warmup states for joint covariance
        bool have_cov = false;

        for (int it = 0; it < total; ++it) {
            const bool warm = it < cfg_.warmup_iters;
            if (cfg_.proposal == ProposalKind::Coordinate || !have_cov) {
                for (std::size_t d = 0; d < dim_; ++d) {
                    const bool acc = coordinate_step(d);
                    (warm ? window_try : keep_try)[d]++;
                    if (acc) (warm ? window_acc : keep_acc)[d]++;
                    if (acc && warm) warm_acc[d]++;
                }
            } else {
                const bool acc = joint_step();
                for (std::size_t d = 0; d < dim_; ++d) {
                    (warm ? window_try : keep_try)[d]++;
                    if (acc) {
                        (warm ? window_acc : keep_acc)[d]++;
                        if (warm) warm_acc[d]++;
                    }
                }
            }

            if (warm) {
                if (cfg_.proposal == ProposalKind::Joint) history.push_back(z_);
                if ((it + 1) % cfg_.adapt_window == 0) {
                    ++batch;
                    const double gain = std::min(2.0, 6.0 / std::sqrt(static_cast<double>(batch)));
                    if (cfg_.proposal == ProposalKind::Coordinate || !have_cov) {
                        for (std::size_t d = 0; d < dim_; ++d) {
                            const double rate = static_cast<double>(window_acc[d]) / static_cast<double>(window_try[d]);
                            scale_[d] *= std::exp(gain * (rate - target));
                        }
                    } else {
                        const double rate = static_cast<double>(window_acc[0]) / static_cast<double>(window_try[0]);
                        joint_scale_ *= std::exp(gain * (rate - target));
                    }
                    std::fill(window_acc.begin(), window_acc.end(), 0);
                    std::fill(window_try.begin(), window_try.end(), 0);
                    if (cfg_.proposal == ProposalKind::Joint && history.size() >= 4 * dim_ + 20 &&
                        batch % 2 == 0) {
                        have_cov = update_covariance(history);
                    }
                }
                if (it + 1 == cfg_.warmup_iters) {
                    for (std::size_t d = 0; d < dim_; ++d) {
                        if (warm_acc[d] == 0) {
                            out.error = "chain " + std::to_string(id_) + ": every warmup proposal for '" +
                                        params_[d].name + "' was rejected (step-size collapse)";
                            return out;
                        }
                    }
                }
            } else {
                const int k = it - cfg_.warmup_iters;
                if (k % cfg_.thin == 0) {
                    out.draws.insert(out.draws.end(), x_.begin(), x_.end());
                    out.iters.push_back(k);
                }
            }
        }
        out.accept_rate.resize(dim_);
        for (std::size_t d = 0; d < dim_; ++d) {
            out.accept_rate[d] = keep_try[d] ? static_cast<double>(keep_acc[d]) / static_cast<double>(keep_try[d]) : 0.0;
        }
        return out;
    }

private:
    void to_constrained(const std::vector<double>& z, std::vector<double>& x) const {
        for (std::size_t d = 0; d < dim_; ++d) {
            x[d] = params_[d].support == Support::Positive ? std::exp(z[d]) : z[d];
        }
    }

    double eval(const std::vector<double>& z, std::vector<double>& x) const {
        to_constrained(z, x);
        double lp = target_(x);
        if (std::isnan(lp)) return -std::numeric_limits<double>::infinity();
        for (std::size_t d = 0; d < dim_; ++d) {
            if (params_[d].support == Support::Positive) lp += z[d];
        }
        return lp;
    }

    void start(std::span<const double> init) {
        std::vector<double> base(dim_);
        for (std::size_t d = 0; d < dim_; ++d) {
            if (params_[d].support == Support::Positive) {
                if (!(init[d] > 0.0)) {
                    throw SamplerError("initial value of positive parameter '" + params_[d].name + "' is not > 0");
                }
                base[d] = std::log(init[d]);
            } else {
                base[d] = init[d];
            }
        }
        z_ = base;
        lp_ = eval(z_, x_);
        if (!std::isfinite(lp_)) {
            throw SamplerError("log target is not finite at the initial point");
        }
        if (cfg_.init_jitter > 0.0) {
            for (int attempt = 0; attempt < 100; ++attempt) {
                std::vector<double> z = base;
                for (auto& v : z) v += draw_normal(rng_, 0.0, cfg_.init_jitter);
                std::vector<double> x(dim_);
                const double lp = eval(z, x);
                if (std::isfinite(lp)) {
                    z_ = std::move(z);
                    x_ = std::move(x);
                    lp_ = lp;
                    break;
                }
            }
        }
    }

    bool coordinate_step(std::size_t d) {
        std::vector<double>& z = proposal_;
        z = z_;
        z[d] += draw_normal(rng_, 0.0, scale_[d]);
        return accept(z);
    }

    bool joint_step() {
        Eigen::VectorXd n(static_cast<Eigen::Index>(dim_));
        for (std::size_t d = 0; d < dim_; ++d) n[static_cast<Eigen::Index>(d)] = draw_normal(rng_, 0.0, 1.0);
        const Eigen::VectorXd step = chol_ * n * joint_scale_;
        std::vector<double>& z = proposal_;
        z = z_;
        for (std::size_t d = 0; d < dim_; ++d) z[d] += step[static_cast<Eigen::Index>(d)];
        return accept(z);
    }

    bool accept(std::vector<double>& z) {
        std::vector<double>& x = proposal_x_;
        x.resize(dim_);
        const double lp = eval(z, x);
        const double u = draw_uniform(rng_);
        if (std::isfinite(lp) && std::log(u) < lp - lp_) {
            std::swap(z_, z);
            std::swap(x_, x);
            lp_ = lp;
            return true;
        }
        return false;
    }

    bool update_covariance(const std::vector<std::vector<double>>& history) {
        // Use the second half of the warmup seen so far.
        const std::size_t from = history.size() / 2;
        const auto n = static_cast<double>(history.size() - from);
        const auto D = static_cast<Eigen::Index>(dim_);
        Eigen::VectorXd mean = Eigen::VectorXd::Zero(D);
        for (std::size_t t = from; t < history.size(); ++t) {
            mean += Eigen::Map<const Eigen::VectorXd>(history[t].data(), D);
        }
        mean /= n;
        Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(D, D);
        for (std::size_t t = from; t < history.size(); ++t) {
            const Eigen::VectorXd c = Eigen::Map<const Eigen::VectorXd>(history[t].data(), D) - mean;
            cov += c * c.transpose();
        }
        cov /= (n - 1.0);
        cov += 1e-10 * Eigen::MatrixXd::Identity(D, D);
        Eigen::LLT<Eigen::MatrixXd> llt(cov);
        if (llt.info() != Eigen::Success) return false;
        chol_ = llt.matrixL();
        if (joint_scale_ == 0.0) joint_scale_ = 2.38 / std::sqrt(static_cast<double>(dim_));
        return true;
    }

    const LogDensity& target_;
    std::span<const ParamSpec> params_;
    const McmcConfig& cfg_;
    int id_;
    std::size_t dim_;
    Rng rng_;
    std::vector<double> z_, x_, scale_, proposal_, proposal_x_;
    double lp_ = 0.0;
    Eigen::MatrixXd chol_;
    double joint_scale_ = 0.0;
};

double variance(const std::vector<double>& v) {
    const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

} // namespace

SampleResult sample(const LogDensity& log_target, std::span<const ParamSpec> params,
                    std::span<const double> init, const McmcConfig& cfg) {
    cfg.validate();
    if (params.empty()) throw SamplerError("nothing to sample: zero parameters");
    if (init.size() != params.size()) {
        throw SamplerError("initial point has " + std::to_string(init.size()) + " values for " +
                           std::to_string(params.size()) + " parameters");
    }

    const auto n_chains = static_cast<std::size_t>(cfg.chains);
    std::vector<ChainOutput> outputs(n_chains);
    std::vector<std::string> start_errors(n_chains);
    auto run_chain = [&](std::size_t c) {
        try {
            Chain chain(log_target, params, cfg, static_cast<int>(c));
            outputs[c] = chain.run(init);
        } catch (const std::exception& e) {
            start_errors[c] = e.what();
        }
    };
    if (cfg.parallel && n_chains > 1) {
        std::vector<std::thread> workers;
        for (std::size_t c = 0; c < n_chains; ++c) workers.emplace_back(run_chain, c);
        for (auto& w : workers) w.join();
    } else {
        for (std::size_t c = 0; c < n_chains; ++c) run_chain(c);
    }
    for (std::size_t c = 0; c < n_chains; ++c) {
        if (!start_errors[c].empty()) throw SamplerError(start_errors[c]);
        if (!outputs[c].error.empty()) throw SamplerError(outputs[c].error);
    }

    std::vector<std::string> names;
    for (const auto& p : params) names.push_back(p.name);
    SampleResult result{PosteriorDraws(names), {}};
    const std::size_t dim = params.size();
    for (std::size_t c = 0; c < n_chains; ++c) {
        const auto& o = outputs[c];
        for (std::size_t r = 0; r < o.iters.size(); ++r) {
            result.draws.append(static_cast<int>(c), o.iters[r],
                                std::span<const double>(o.draws.data() + r * dim, dim));
        }
        result.diagnostics.accept_rate.push_back(o.accept_rate);
    }
    result.diagnostics.names = names;
    // Diagnostics need at least 100 kept draws per chain; NaN below that.
    const bool enough = result.draws.size() / n_chains >= 100;
    if (n_chains >= 2 && enough) {
        result.diagnostics.rhat = split_rhat(result.draws);
    } else {
        result.diagnostics.rhat.assign(dim, std::numeric_limits<double>::quiet_NaN());
    }
    if (enough) {
        result.diagnostics.ess = effective_sample_size(result.draws);
    } else {
        result.diagnostics.ess.assign(dim, std::numeric_limits<double>::quiet_NaN());
    }
    return result;
}

// ---------------------------------------------------------------------------
// Diagnostics

double split_rhat(const std::vector<std::vector<double>>& chains) {
    if (chains.size() < 2) throw DataError("split R-hat needs at least 2 chains");
    std::size_t n = chains.front().size();
    for (const auto& c : chains) n = std::min(n, c.size());
    if (n < 4) throw DataError("split R-hat needs at least 4 draws per chain");
    const std::size_t half = n / 2;
    std::vector<std::vector<double>> halves;
    for (const auto& c : chains) {
        halves.emplace_back(c.begin(), c.begin() + static_cast<long>(half));
        halves.emplace_back(c.begin() + static_cast<long>(n - half), c.begin() + static_cast<long>(n));
    }
    std::vector<double> means, vars;
    for (const auto& h : halves) {
        means.push_back(mean_of(h));
        vars.push_back(variance(h));
    }
    const double w = mean_of(vars);
    const double b_over_n = variance(means);
    const auto len = static_cast<double>(half);
    const double var_plus = (len - 1.0) / len * w + b_over_n;
    if (w == 0.0) return var_plus == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
    return std::sqrt(var_plus / w);
}

double effective_sample_size(const std::vector<std::vector<double>>& chains) {
    if (chains.empty()) throw DataError("ESS needs at least one chain");
    std::size_t n = chains.front().size();
    for (const auto& c : chains) n = std::min(n, c.size());
    if (n < 4) throw DataError("ESS needs at least 4 draws per chain");
    const std::size_t m = chains.size();

    std::vector<double> means(m), vars(m);
    for (std::size_t c = 0; c < m; ++c) {
        std::vector<double> head(chains[c].begin(), chains[c].begin() + static_cast<long>(n));
        means[c] = mean_of(head);
        vars[c] = variance(head);
    }
    const auto len = static_cast<double>(n);
    const double w = mean_of(vars);
    const double b_over_n = m > 1 ? variance(means) : 0.0;
    const double var_plus = (len - 1.0) / len * w + b_over_n;
    const double total = len * static_cast<double>(m);
    if (var_plus <= 0.0) return total;

    auto autocov = [&](std::size_t c, std::size_t lag) {
        double s = 0.0;
        for (std::size_t t = 0; t + lag < n; ++t) {
            s += (chains[c][t] - means[c]) * (chains[c][t + lag] - means[c]);
        }
        return s / len;
    };
    auto rho = [&](std::size_t lag) {
        double acov = 0.0;
        for (std::size_t c = 0; c < m; ++c) acov += autocov(c, lag);
        acov /= static_cast<double>(m);
        // Chain variances above use n-1; rescale the biased lag-0 term consistently.
        return 1.0 - (w * (len - 1.0) / len - acov) / var_plus;
    };

    double tau = -1.0;
    double prev_pair = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; 2 * k + 1 < n; ++k) {
        double pair = rho(2 * k) + rho(2 * k + 1);
        if (pair <= 0.0) break;
        pair = std::min(pair, prev_pair);
        prev_pair = pair;
        tau += 2.0 * pair;
    }
    if (tau <= 0.0) return total;
    return std::min(total, total / tau);
}

std::vector<double> split_rhat(const PosteriorDraws& draws) {
    std::vector<double> out;
    for (std::size_t c = 0; c < draws.dim(); ++c) out.push_back(split_rhat(draws.by_chain(c)));
    return out;
}

std::vector<double> effective_sample_size(const PosteriorDraws& draws) {
    std::vector<double> out;
    for (std::size_t c = 0; c < draws.dim(); ++c) out.push_back(effective_sample_size(draws.by_chain(c)));
    return out;
}

} // namespace waitflow
