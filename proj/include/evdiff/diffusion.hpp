#pragma once

#include <functional>
#include <vector>

#include "evdiff/rng.hpp"
#include "evdiff/tensor.hpp"

namespace evdiff {

// Variance schedule over T steps with 64-bit derived arrays. The forward
// marginal uses the cumulative product alpha_bar(t); alpha_bar(0) is 1 by
// convention so updates that land on t=0 need no special casing.
class NoiseSchedule {
public:
    static NoiseSchedule linear(int steps, double beta_start, double beta_end);

    int steps() const { return static_cast<int>(betas_.size()); }
    double beta(int t) const;       // t in [1, T]
    double alpha(int t) const;      // 1 - beta(t)
    double alpha_bar(int t) const;  // t in [0, T]

private:
    std::vector<double> betas_;
    std::vector<double> alpha_bars_;
};

// eps-predictor: (x_t, t) -> predicted noise of x_t's dims. Conditioning
// (hazy latent, event feature) is closed over by the caller.
using DenoiseFn = std::function<Tensor(const Tensor& x_t, int t)>;

// x_t = sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) eps.
Tensor q_sample(const Tensor& x0, int t, const Tensor& eps, const NoiseSchedule& sched);

// One Monte-Carlo draw of the eps-prediction objective: t uniform in {1..T},
// eps standard normal, returns mean squared error over elements.
double simple_loss(const DenoiseFn& denoiser, const Tensor& x0, Rng& rng, const NoiseSchedule& sched);

// Evenly spaced step indices {1..T} including both endpoints, descending.
std::vector<int> sample_substeps(int total_steps, int steps);

// Ancestral sampler on the (possibly strided) sub-schedule. Posterior mean
// from the eps-prediction, posterior variance beta_tilde; the final step
// adds no noise.
Tensor ddpm_sample(const DenoiseFn& denoiser, const Tensor& x_T, const NoiseSchedule& sched, Rng& rng,
                   int steps);

// sigma_t for the eta parameterization; eta=0 is the deterministic sampler.
double ddim_sigma(const NoiseSchedule& sched, int t, int t_prev, double eta);

// x_{t_prev} = sqrt(ab_prev) x0_hat + sqrt(1 - ab_prev - sigma^2) eps_hat + sigma z.
// z may be null when sigma_t == 0.
Tensor ddim_step(const DenoiseFn& denoiser, const Tensor& x_t, int t, int t_prev,
                 const NoiseSchedule& sched, double sigma_t, const Tensor* z);

Tensor ddim_sample(const DenoiseFn& denoiser, const Tensor& x_T, const NoiseSchedule& sched, Rng& rng,
                   int steps, double eta);

// Closed-form optimal eps-predictor for data distributed N(mu, sigma2 I).
// With x_t = sqrt(ab) x0 + sqrt(1-ab) eps:
//   E[x0 | x_t] = mu + sqrt(ab) sigma2 / (ab sigma2 + 1 - ab) * (x_t - sqrt(ab) mu)
//   eps_hat     = (x_t - sqrt(ab) E[x0 | x_t]) / sqrt(1 - ab)
// (Gaussian conditioning of the joint (x0, x_t); cross-covariance
// sqrt(ab) sigma2, marginal variance ab sigma2 + 1 - ab.)
DenoiseFn gaussian_oracle_denoiser(double mu, double sigma2, NoiseSchedule sched);

}  // namespace evdiff
