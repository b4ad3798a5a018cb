#include "lvgp/nuts.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "lvgp/errors.hpp"

namespace lvgp {

namespace {

constexpr double kDeltaMax = 1000.0;  // divergence threshold on the joint

struct State {
  Eigen::VectorXd q;     // position
  Eigen::VectorXd p;     // momentum
  Eigen::VectorXd grad;  // gradient of log density at q
  double logp = 0.0;

  double joint(const Eigen::VectorXd& inv_mass) const {
    return logp - 0.5 * (p.array().square() * inv_mass.array()).sum();
  }
};

class Sampler {
 public:
  Sampler(const LogDensity& target, const NutsOptions& opts, int dim)
      : target_(target), opts_(opts), rng_(opts.seed),
        inv_mass_(Eigen::VectorXd::Ones(dim)) {}

  double eval(State& s) {
    s.grad.resize(s.q.size());
    s.logp = target_(s.q, s.grad);
    ++grad_evals_;
    if (!std::isfinite(s.logp))
      s.logp = -std::numeric_limits<double>::infinity();
    return s.logp;
  }

  void leapfrog(State& s, double eps) {
    s.p += 0.5 * eps * s.grad;
    s.q += eps * (inv_mass_.array() * s.p.array()).matrix();
    eval(s);
    s.p += 0.5 * eps * s.grad;
  }

  bool no_uturn(const State& minus, const State& plus) const {
    Eigen::VectorXd dq = plus.q - minus.q;
    return dq.dot((inv_mass_.array() * minus.p.array()).matrix()) >= 0.0 &&
           dq.dot((inv_mass_.array() * plus.p.array()).matrix()) >= 0.0;
  }

  struct Tree {
    State minus, plus, proposal;
    long n_valid = 0;
    bool keep_going = true;
    bool divergent = false;
    double sum_accept = 0.0;
    long n_accept = 0;
  };

  Tree build_tree(const State& from, double log_u, int dir, int depth, double eps,
                  double joint0) {
    Tree t;
    if (depth == 0) {
      State s = from;
      leapfrog(s, dir * eps);
      const double joint = s.joint(inv_mass_);
      t.n_valid = (log_u <= joint) ? 1 : 0;
      t.divergent = (joint - log_u) < -kDeltaMax;
      t.keep_going = !t.divergent;
      t.sum_accept = std::min(1.0, std::exp(joint - joint0));
      t.n_accept = 1;
      t.minus = s;
      t.plus = s;
      t.proposal = std::move(s);
      return t;
    }
    t = build_tree(from, log_u, dir, depth - 1, eps, joint0);
    if (!t.keep_going) return t;
    Tree t2 = build_tree(dir == -1 ? t.minus : t.plus, log_u, dir, depth - 1, eps,
                         joint0);
    if (dir == -1)
      t.minus = t2.minus;
    else
      t.plus = t2.plus;
    if (t2.n_valid > 0 &&
        std::uniform_real_distribution<double>(0.0, 1.0)(rng_) <
            static_cast<double>(t2.n_valid) / (t.n_valid + t2.n_valid))
      t.proposal = t2.proposal;
    t.n_valid += t2.n_valid;
    t.sum_accept += t2.sum_accept;
    t.n_accept += t2.n_accept;
    t.divergent = t.divergent || t2.divergent;
    t.keep_going = t2.keep_going && no_uturn(t.minus, t.plus);
    return t;
  }

  // One NUTS transition; returns the acceptance statistic and sets the
  // divergence flag.
  double transition(State& current, double eps, bool* divergent) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int i = 0; i < current.p.size(); ++i)
      current.p[i] = normal(rng_) / std::sqrt(inv_mass_[i]);
    const double joint0 = current.joint(inv_mass_);
    const double log_u =
        joint0 + std::log(std::uniform_real_distribution<double>(0.0, 1.0)(rng_));

    State minus = current, plus = current, proposal = current;
    long n_valid = 1;
    bool keep_going = true;
    double sum_accept = 0.0;
    long n_accept = 0;
    *divergent = false;

    for (int depth = 0; depth < opts_.max_depth && keep_going; ++depth) {
      const int dir =
          std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < 0.5 ? -1 : 1;
      Tree t = build_tree(dir == -1 ? minus : plus, log_u, dir, depth, eps, joint0);
      if (dir == -1)
        minus = t.minus;
      else
        plus = t.plus;
      if (t.keep_going && t.n_valid > 0 &&
          std::uniform_real_distribution<double>(0.0, 1.0)(rng_) <
              static_cast<double>(t.n_valid) / n_valid)
        proposal = t.proposal;
      n_valid += t.n_valid;
      sum_accept += t.sum_accept;
      n_accept += t.n_accept;
      if (t.divergent) *divergent = true;
      keep_going = t.keep_going && no_uturn(minus, plus);
    }
    current = std::move(proposal);
    return n_accept > 0 ? sum_accept / n_accept : 0.0;
  }

  double find_initial_step(State& s) {
    double eps = 1.0;
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int i = 0; i < s.p.size(); ++i) s.p[i] = normal(rng_);
    const double joint0 = s.joint(inv_mass_);
    State trial = s;
    leapfrog(trial, eps);
    double delta = trial.joint(inv_mass_) - joint0;
    const double dir = (std::isfinite(delta) && delta > std::log(0.5)) ? 1.0 : -1.0;
    for (int i = 0; i < 50; ++i) {
      eps *= std::pow(2.0, dir);
      trial = s;
      leapfrog(trial, eps);
      delta = trial.joint(inv_mass_) - joint0;
      if (!std::isfinite(delta)) delta = -std::numeric_limits<double>::infinity();
      if (dir * delta <= dir * std::log(0.5)) break;
    }
    return eps;
  }

  NutsChainResult run(const Eigen::VectorXd& init) {
    const int dim = static_cast<int>(init.size());
    State s;
    s.q = init;
    s.p.setZero(dim);
    if (!std::isfinite(eval(s)))
      throw NumericalError("NUTS: target not finite at initial point");

    double eps = find_initial_step(s);

    // Dual averaging state.
    double mu = std::log(10.0 * eps);
    double log_eps = std::log(eps), log_eps_bar = 0.0, h_bar = 0.0;
    const double da_gamma = 0.05, t0 = 10.0, kappa = 0.75;

    // Mass-matrix estimation window: middle portion of warmup.
    const int win_lo = opts_.warmup / 4;
    const int win_hi = std::max(win_lo + 1, (opts_.warmup * 9) / 10);
    Eigen::VectorXd acc_mean = Eigen::VectorXd::Zero(dim);
    Eigen::VectorXd acc_m2 = Eigen::VectorXd::Zero(dim);
    long acc_n = 0;

    NutsChainResult res;
    res.draws.resize(opts_.draws, dim);

    double accept_sum = 0.0;
    for (int iter = 0; iter < opts_.warmup + opts_.draws; ++iter) {
      const bool warming = iter < opts_.warmup;
      bool divergent = false;
      const double accept = transition(s, std::exp(log_eps), &divergent);

      if (warming) {
        const double m = iter + 1;
        h_bar = (1.0 - 1.0 / (m + t0)) * h_bar +
                (opts_.target_accept - accept) / (m + t0);
        log_eps = mu - std::sqrt(m) / da_gamma * h_bar;
        const double w = std::pow(m, -kappa);
        log_eps_bar = w * log_eps + (1.0 - w) * log_eps_bar;

        if (iter >= win_lo && iter < win_hi) {
          ++acc_n;
          Eigen::VectorXd delta = s.q - acc_mean;
          acc_mean += delta / acc_n;
          acc_m2 += delta.cwiseProduct(s.q - acc_mean);
        }
        if (iter + 1 == win_hi && acc_n > 5) {
          Eigen::VectorXd var = acc_m2 / (acc_n - 1);
          // Stan-style regularization toward unit scale.
          const double shrink = acc_n / (acc_n + 5.0);
          inv_mass_ = shrink * var.array() + (1.0 - shrink) * 1e-3;
          eps = find_initial_step(s);
          log_eps = std::log(eps);
          mu = std::log(10.0 * eps);
          log_eps_bar = 0.0;
          h_bar = 0.0;
        }
        if (iter + 1 == opts_.warmup) log_eps = log_eps_bar;
      } else {
        res.draws.row(iter - opts_.warmup) = s.q;
        if (divergent) ++res.divergences;
        accept_sum += accept;
      }
    }
    res.step_size = std::exp(log_eps);
    res.inv_mass = inv_mass_;
    res.mean_accept = opts_.draws > 0 ? accept_sum / opts_.draws : 0.0;
    res.num_gradient_evals = grad_evals_;
    return res;
  }

 private:
  const LogDensity& target_;
  NutsOptions opts_;
  std::mt19937_64 rng_;
  Eigen::VectorXd inv_mass_;
  long grad_evals_ = 0;
};

}  // namespace

NutsChainResult nuts_chain(const LogDensity& target, const Eigen::VectorXd& init,
                           const NutsOptions& opts) {
  if (opts.draws < 1) throw ValidationError("NUTS draws must be >= 1");
  Sampler sampler(target, opts, static_cast<int>(init.size()));
  return sampler.run(init);
}

}  // namespace lvgp
