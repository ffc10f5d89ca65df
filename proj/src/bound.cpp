#include "cdcnn/bound.hpp"

#include <cmath>
#include <random>

#include <boost/math/distributions/binomial.hpp>

#include "cdcnn/errors.hpp"
#include "cdcnn/rng.hpp"
#include "cdcnn/textio.hpp"

namespace cdcnn::bound {

void validate(const BoundParams& p) {
  if (p.n < 1 || p.m < 1) throw InvalidInput("bound: n and m must be >= 1");
  if (!(p.K >= 0.0) || !(p.dt >= 0.0) || !(p.max_var >= 0.0)) {
    throw InvalidInput("bound: K, dt and max_var must be >= 0");
  }
  const double threshold = std::sqrt(static_cast<double>(p.n) / p.m * p.max_var);
  if (!(p.delta > threshold)) {
    throw InvalidInput("bound: delta=" + format_double(p.delta) + " must exceed sqrt(n/m * max_var)=" +
                       format_double(threshold));
  }
}

double epsilon(const BoundParams& p) { return p.n * p.K * p.dt; }

double rho(const BoundParams& p) {
  validate(p);
  return p.n * p.max_var / (p.m * p.delta * p.delta);
}

double bound_value(std::span<const double> losses, const BoundParams& p) {
  if (losses.size() != static_cast<std::size_t>(p.m)) {
    throw InvalidInput("bound_value: expected " + std::to_string(p.m) + " losses, got " +
                       std::to_string(losses.size()));
  }
  double root_sum = 0.0;
  for (double l : losses) {
    if (!(l >= 0.0)) throw InvalidInput("bound_value: negative continuity loss");
    root_sum += std::sqrt(l);
  }
  return root_sum / p.m + p.n * (p.delta + p.K * p.dt);
}

std::string_view distribution_name(Distribution d) {
  switch (d) {
    case Distribution::gaussian:
      return "gaussian";
    case Distribution::uniform:
      return "uniform";
    case Distribution::shifted_bernoulli:
      return "shifted-bernoulli";
  }
  return "unknown";
}

Distribution parse_distribution(std::string_view name) {
  for (Distribution d : {Distribution::gaussian, Distribution::uniform, Distribution::shifted_bernoulli}) {
    if (distribution_name(d) == name) return d;
  }
  throw InvalidConfig("unknown distribution '" + std::string(name) + "'");
}

std::string_view predictor_name(Predictor p) {
  switch (p) {
    case Predictor::truth:
      return "truth";
    case Predictor::sample_mean:
      return "sample-mean";
    case Predictor::adversarial:
      return "adversarial";
  }
  return "unknown";
}

Predictor parse_predictor(std::string_view name) {
  for (Predictor p : {Predictor::truth, Predictor::sample_mean, Predictor::adversarial}) {
    if (predictor_name(p) == name) return p;
  }
  throw InvalidConfig("unknown predictor '" + std::string(name) + "'");
}

std::size_t binomial_critical_count(std::size_t trials, double rate, double confidence) {
  if (rate <= 0.0) return 0;
  if (rate >= 1.0) return trials;
  const boost::math::binomial_distribution<double> dist(static_cast<double>(trials), rate);
  // Smallest c with CDF(c) >= confidence.
  std::size_t c = static_cast<std::size_t>(std::floor(boost::math::quantile(dist, confidence)));
  while (c > 0 && boost::math::cdf(dist, static_cast<double>(c - 1)) >= confidence) --c;
  while (c < trials && boost::math::cdf(dist, static_cast<double>(c)) < confidence) ++c;
  return c;
}

namespace {

// Zero-mean noise with the configured per-dimension variances.
class NoiseSource {
 public:
  NoiseSource(const DistributionSpec& spec, const BoundParams& p) : spec_(spec) {
    if (spec.variances.empty()) {
      variances_.assign(static_cast<std::size_t>(p.n), p.max_var);
    } else {
      variances_ = spec.variances;
    }
    if (variances_.size() != static_cast<std::size_t>(p.n)) {
      throw InvalidInput("distribution: expected " + std::to_string(p.n) + " variances");
    }
    for (double v : variances_) {
      if (!(v >= 0.0) || v > p.max_var * (1.0 + 1e-12)) {
        throw InvalidInput("distribution: variance " + format_double(v) + " outside [0, max_var]");
      }
    }
    if (spec.kind == Distribution::shifted_bernoulli && !(spec.bernoulli_p > 0.0 && spec.bernoulli_p < 1.0)) {
      throw InvalidInput("distribution: bernoulli_p must lie in (0, 1)");
    }
  }

  double draw(std::size_t dim, Rng& rng) const {
    const double var = variances_[dim];
    if (var == 0.0) return 0.0;
    switch (spec_.kind) {
      case Distribution::gaussian:
        return std::normal_distribution<double>(0.0, std::sqrt(var))(rng);
      case Distribution::uniform: {
        const double half = std::sqrt(3.0 * var);
        return std::uniform_real_distribution<double>(-half, half)(rng);
      }
      case Distribution::shifted_bernoulli: {
        const double q = spec_.bernoulli_p;
        const double scale = std::sqrt(var / (q * (1.0 - q)));
        const double b = std::bernoulli_distribution(q)(rng) ? 1.0 : 0.0;
        return scale * (b - q);
      }
    }
    return 0.0;
  }

 private:
  DistributionSpec spec_;
  std::vector<double> variances_;
};

std::string params_label(const BoundParams& p) {
  return "n" + std::to_string(p.n) + ":m" + std::to_string(p.m) + ":delta" + format_double(p.delta) + ":K" +
         format_double(p.K) + ":maxvar" + format_double(p.max_var);
}

}  // namespace

ChebyshevReport verify_chebyshev(const BoundParams& p, const DistributionSpec& dist, std::size_t trials,
                                 std::uint64_t seed) {
  ChebyshevReport report;
  report.rho = rho(p);
  if (trials == 0) throw InvalidInput("verify_chebyshev: trials must be >= 1");
  const NoiseSource noise(dist, p);
  report.label = "chebyshev:" + std::string(distribution_name(dist.kind)) + ":" + params_label(p);
  report.trials = trials;

  std::vector<double> mean(static_cast<std::size_t>(p.n));
  for (std::size_t trial = 0; trial < trials; ++trial) {
    Rng rng(derive_seed(seed, trial));
    std::fill(mean.begin(), mean.end(), 0.0);
    for (int j = 0; j < p.m; ++j) {
      for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += noise.draw(i, rng);
    }
    bool flagged = false;
    for (double& mu : mean) {
      mu /= p.m;
      if (std::abs(mu) >= p.delta) flagged = true;
    }
    report.flagged += flagged ? 1 : 0;
  }
  report.violation_rate = static_cast<double>(report.flagged) / static_cast<double>(trials);
  report.critical_count = binomial_critical_count(trials, report.rho);
  report.passed = report.flagged <= report.critical_count;
  return report;
}

ErrorBoundReport verify_error_bound(const BoundParams& p, const ScenarioSpec& scenario, std::size_t trials,
                                    std::uint64_t seed) {
  ErrorBoundReport report;
  report.rho = rho(p);
  if (trials == 0) throw InvalidInput("verify_error_bound: trials must be >= 1");
  const double drift = scenario.drift_per_dim < 0.0 ? p.K * p.dt : scenario.drift_per_dim;
  if (drift > p.K * p.dt * (1.0 + 1e-12)) {
    throw InvalidInput("verify_error_bound: drift " + format_double(drift) + " exceeds K*dt=" +
                       format_double(p.K * p.dt));
  }
  const NoiseSource noise(scenario.noise, p);
  report.label = "error-bound:" + std::string(distribution_name(scenario.noise.kind)) + ":" +
                 std::string(predictor_name(scenario.predictor)) + ":" + params_label(p);
  report.trials = trials;

  const auto n = static_cast<std::size_t>(p.n);
  const auto m = static_cast<std::size_t>(p.m);
  std::vector<double> truth_t(n), truth_t1(n), predicted(n), mean(n);
  std::vector<std::vector<double>> positives(m, std::vector<double>(n));
  std::vector<double> losses(m);
  std::uniform_real_distribution<double> unit_box(-1.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  for (std::size_t trial = 0; trial < trials; ++trial) {
    Rng rng(derive_seed(seed, trial));
    for (std::size_t i = 0; i < n; ++i) {
      truth_t[i] = unit_box(rng);
      truth_t1[i] = truth_t[i] + (std::bernoulli_distribution(0.5)(rng) ? drift : -drift);
    }
    std::fill(mean.begin(), mean.end(), 0.0);
    for (auto& pos : positives) {
      for (std::size_t i = 0; i < n; ++i) {
        pos[i] = truth_t[i] + noise.draw(i, rng);
        mean[i] += pos[i];
      }
    }
    bool event = true;
    for (std::size_t i = 0; i < n; ++i) {
      mean[i] /= static_cast<double>(m);
      if (std::abs(mean[i] - truth_t[i]) >= p.delta) event = false;
    }

    switch (scenario.predictor) {
      case Predictor::truth:
        predicted = truth_t1;
        break;
      case Predictor::sample_mean:
        predicted = mean;
        break;
      case Predictor::adversarial: {
        double norm = 0.0;
        std::vector<double> dir(n);
        for (double& d : dir) {
          d = gauss(rng);
          norm += d * d;
        }
        norm = std::sqrt(norm);
        for (std::size_t i = 0; i < n; ++i) predicted[i] = truth_t1[i] + scenario.adversarial_offset * dir[i] / norm;
        break;
      }
    }

    double err2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) err2 += (predicted[i] - truth_t1[i]) * (predicted[i] - truth_t1[i]);
    const double error = std::sqrt(err2);
    for (std::size_t j = 0; j < m; ++j) {
      double l = 0.0;
      for (std::size_t i = 0; i < n; ++i) l += (predicted[i] - positives[j][i]) * (predicted[i] - positives[j][i]);
      losses[j] = l;
    }
    const double bound = bound_value(losses, p);
    const bool ok = error <= bound;
    report.satisfied += ok ? 1 : 0;
    report.chebyshev_events += event ? 1 : 0;
    report.chebyshev_but_violated += (event && !ok) ? 1 : 0;
    report.mean_error += error;
    report.mean_bound += bound;
  }
  report.mean_error /= static_cast<double>(trials);
  report.mean_bound /= static_cast<double>(trials);
  report.satisfaction_rate = static_cast<double>(report.satisfied) / static_cast<double>(trials);
  report.critical_count = binomial_critical_count(trials, report.rho);
  report.passed = (trials - report.satisfied) <= report.critical_count && report.chebyshev_but_violated == 0;
  return report;
}

std::string report_csv(std::span<const ChebyshevReport> chebyshev, std::span<const ErrorBoundReport> error_bound) {
  std::string out = "trial_param_set,rho,violation_rate,satisfaction_rate,pass\n";
  for (const auto& r : chebyshev) {
    out += r.label + "," + format_double(r.rho) + "," + format_double(r.violation_rate) + "," +
           format_double(1.0 - r.violation_rate) + "," + (r.passed ? "1" : "0") + "\n";
  }
  for (const auto& r : error_bound) {
    out += r.label + "," + format_double(r.rho) + "," + format_double(1.0 - r.satisfaction_rate) + "," +
           format_double(r.satisfaction_rate) + "," + (r.passed ? "1" : "0") + "\n";
  }
  return out;
}

}  // namespace cdcnn::bound
