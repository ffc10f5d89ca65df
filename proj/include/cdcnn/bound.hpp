#ifndef CDCNN_BOUND_HPP_
#define CDCNN_BOUND_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cdcnn::bound {

// Inputs of the representation-error bound: feature dimension n, samples per
// frame m, per-dimension deviation delta, Lipschitz constant K, time step dt
// and the largest per-dimension feature variance.
struct BoundParams {
  int n = 4;
  int m = 100;
  double delta = 0.5;
  double K = 0.1;
  double dt = 1.0;
  double max_var = 1.0;
};

// Throws InvalidInput unless n, m >= 1, K, dt, max_var >= 0 and
// delta > sqrt(n * max_var / m) (equivalently rho < 1).
void validate(const BoundParams& p);

// n * K * dt: bound on the frame-to-frame feature distance of the target.
double epsilon(const BoundParams& p);
// n * max_var / (m * delta^2): failure probability of the bound.
double rho(const BoundParams& p);
// (1/m) sum_j sqrt(L_j) + n * (delta + K * dt) for m continuity losses L_j.
double bound_value(std::span<const double> continuity_losses, const BoundParams& p);

enum class Distribution { gaussian, uniform, shifted_bernoulli };

std::string_view distribution_name(Distribution d);
Distribution parse_distribution(std::string_view name);

// Zero-mean noise added to the true feature. `variances` holds one variance per
// dimension; empty means max_var in every dimension.
struct DistributionSpec {
  Distribution kind = Distribution::gaussian;
  std::vector<double> variances;
  double bernoulli_p = 0.1;  // success probability of the shifted Bernoulli
};

// Largest count c with P(Binomial(trials, rate) > c) <= 1 - confidence.
std::size_t binomial_critical_count(std::size_t trials, double rate, double confidence = 0.99);

struct ChebyshevReport {
  std::string label;
  std::size_t trials = 0;
  std::size_t flagged = 0;  // trials with some |mean_i - truth_i| >= delta
  double rho = 0.0;
  double violation_rate = 0.0;
  std::size_t critical_count = 0;
  bool passed = false;
};

// Per trial: m i.i.d. feature vectors, per-dimension sample means, flag the
// trial when any dimension deviates by >= delta. Passes when the flagged
// count does not exceed the 99% binomial critical count at rate rho.
ChebyshevReport verify_chebyshev(const BoundParams& p, const DistributionSpec& dist, std::size_t trials,
                                 std::uint64_t seed);

enum class Predictor { truth, sample_mean, adversarial };

std::string_view predictor_name(Predictor p);
Predictor parse_predictor(std::string_view name);

struct ScenarioSpec {
  DistributionSpec noise;
  Predictor predictor = Predictor::sample_mean;
  double drift_per_dim = -1.0;       // |Phi_i(t+1) - Phi_i(t)|; negative means K * dt
  double adversarial_offset = 10.0;  // distance of the adversarial prediction from the truth
};

struct ErrorBoundReport {
  std::string label;
  std::size_t trials = 0;
  std::size_t satisfied = 0;          // trials with error <= bound
  std::size_t chebyshev_events = 0;   // trials where every dimension stayed within delta
  std::size_t chebyshev_but_violated = 0;  // must be zero: the bound holds on the event
  double rho = 0.0;
  double satisfaction_rate = 0.0;
  double mean_error = 0.0;
  double mean_bound = 0.0;
  std::size_t critical_count = 0;
  bool passed = false;
};

// Per trial: true features at t and t+1 (drift <= K dt per dimension), m noisy
// positives at t, a predicted feature at t+1; compares the representation
// error with bound_value. Throws InvalidInput when the drift exceeds K dt.
ErrorBoundReport verify_error_bound(const BoundParams& p, const ScenarioSpec& scenario, std::size_t trials,
                                    std::uint64_t seed);

// "trial_param_set,rho,violation_rate,satisfaction_rate,pass".
std::string report_csv(std::span<const ChebyshevReport> chebyshev, std::span<const ErrorBoundReport> error_bound);

}  // namespace cdcnn::bound

#endif  // CDCNN_BOUND_HPP_
