#include "evdiff/diffusion.hpp"

#include <algorithm>
#include <cmath>

#include "evdiff/errors.hpp"

namespace evdiff {

NoiseSchedule NoiseSchedule::linear(int steps, double beta_start, double beta_end) {
    if (steps < 1) throw ValidationError("schedule needs at least 1 step");
    if (!(beta_start > 0.0) || !(beta_end < 1.0) || beta_start > beta_end)
        throw ValidationError("schedule requires 0 < beta_start <= beta_end < 1");
    NoiseSchedule s;
    s.betas_.resize(steps);
    s.alpha_bars_.resize(steps);
    double prod = 1.0;
    for (int i = 0; i < steps; ++i) {
        s.betas_[i] = steps == 1 ? beta_start
                                 : beta_start + (beta_end - beta_start) * static_cast<double>(i) / (steps - 1);
        prod *= 1.0 - s.betas_[i];
        s.alpha_bars_[i] = prod;
    }
    return s;
}

double NoiseSchedule::beta(int t) const {
    if (t < 1 || t > steps()) throw ValidationError("beta index " + std::to_string(t) + " outside [1,T]");
    return betas_[t - 1];
}

double NoiseSchedule::alpha(int t) const { return 1.0 - beta(t); }

double NoiseSchedule::alpha_bar(int t) const {
    if (t == 0) return 1.0;
    if (t < 0 || t > steps()) throw ValidationError("alpha_bar index " + std::to_string(t) + " outside [0,T]");
    return alpha_bars_[t - 1];
}

Tensor q_sample(const Tensor& x0, int t, const Tensor& eps, const NoiseSchedule& sched) {
    if (!x0.same_dims(eps))
        throw DimensionError("q_sample: eps dims " + dims_to_string(eps.dims()) + " vs x0 " + dims_to_string(x0.dims()));
    const double ab = sched.alpha_bar(t);
    const float cs = static_cast<float>(std::sqrt(ab));
    const float cn = static_cast<float>(std::sqrt(1.0 - ab));
    Tensor out = Tensor::zeros(x0.dims());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = cs * x0[i] + cn * eps[i];
    return out;
}

double simple_loss(const DenoiseFn& denoiser, const Tensor& x0, Rng& rng, const NoiseSchedule& sched) {
    const int t = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(sched.steps())));
    Tensor eps = gaussian_sample(rng, x0.dims());
    Tensor x_t = q_sample(x0, t, eps, sched);
    Tensor pred = denoiser(x_t, t);
    if (!pred.same_dims(x0)) throw DimensionError("denoiser output dims differ from input");
    double acc = 0.0;
    for (std::size_t i = 0; i < eps.size(); ++i) {
        const double d = static_cast<double>(eps[i]) - static_cast<double>(pred[i]);
        acc += d * d;
    }
    return acc / static_cast<double>(eps.size());
}

std::vector<int> sample_substeps(int total_steps, int steps) {
    if (steps < 1) throw ValidationError("sampler needs at least 1 step");
    if (steps > total_steps)
        throw ValidationError("sampler steps " + std::to_string(steps) + " exceed schedule T " +
                              std::to_string(total_steps));
    std::vector<int> taus;
    if (steps == 1) {
        taus.push_back(total_steps);
        return taus;
    }
    int prev = 0;
    for (int i = 1; i <= steps; ++i) {
        int tau = 1 + static_cast<int>(std::llround(static_cast<double>(i - 1) *
                                                    static_cast<double>(total_steps - 1) / (steps - 1)));
        if (tau <= prev) tau = prev + 1;  // guard rounding collisions
        taus.push_back(tau);
        prev = tau;
    }
    std::reverse(taus.begin(), taus.end());  // descending, taus.front() == T
    return taus;
}

Tensor ddpm_sample(const DenoiseFn& denoiser, const Tensor& x_T, const NoiseSchedule& sched, Rng& rng,
                   int steps) {
    const std::vector<int> taus = sample_substeps(sched.steps(), steps);
    Tensor x = x_T;
    for (std::size_t i = 0; i < taus.size(); ++i) {
        const int t = taus[i];
        const int t_prev = i + 1 < taus.size() ? taus[i + 1] : 0;
        const double ab_t = sched.alpha_bar(t);
        const double ab_prev = sched.alpha_bar(t_prev);
        const double alpha_eff = ab_t / ab_prev;
        const double beta_eff = 1.0 - alpha_eff;
        const double coef_x0 = std::sqrt(ab_prev) * beta_eff / (1.0 - ab_t);
        const double coef_xt = std::sqrt(alpha_eff) * (1.0 - ab_prev) / (1.0 - ab_t);
        const double var = beta_eff * (1.0 - ab_prev) / (1.0 - ab_t);
        const double inv_sqrt_ab_t = 1.0 / std::sqrt(ab_t);
        const double noise_coef = std::sqrt(1.0 - ab_t);

        Tensor eps_hat = denoiser(x, t);
        const bool add_noise = t_prev > 0;
        Tensor z = add_noise ? gaussian_sample(rng, x.dims()) : Tensor();
        const double sd = add_noise ? std::sqrt(var) : 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) {
            const double x0_hat = (static_cast<double>(x[j]) - noise_coef * eps_hat[j]) * inv_sqrt_ab_t;
            double v = coef_x0 * x0_hat + coef_xt * static_cast<double>(x[j]);
            if (add_noise) v += sd * static_cast<double>(z[j]);
            x[j] = static_cast<float>(v);
        }
    }
    return x;
}

double ddim_sigma(const NoiseSchedule& sched, int t, int t_prev, double eta) {
    if (eta < 0.0) throw ValidationError("eta must be >= 0");
    const double ab_t = sched.alpha_bar(t);
    const double ab_prev = sched.alpha_bar(t_prev);
    return eta * std::sqrt((1.0 - ab_prev) / (1.0 - ab_t)) * std::sqrt(1.0 - ab_t / ab_prev);
}

Tensor ddim_step(const DenoiseFn& denoiser, const Tensor& x_t, int t, int t_prev,
                 const NoiseSchedule& sched, double sigma_t, const Tensor* z) {
    if (t_prev >= t) throw ValidationError("ddim_step needs t_prev < t");
    if (sigma_t < 0.0) throw ValidationError("sigma_t must be >= 0");
    const double ab_t = sched.alpha_bar(t);
    const double ab_prev = sched.alpha_bar(t_prev);
    const double carry_sq = 1.0 - ab_prev - sigma_t * sigma_t;
    // allow the exact boundary sigma^2 == 1 - ab_prev up to rounding
    if (carry_sq < -1e-12)
        throw ValidationError("sigma_t^2 exceeds 1 - alpha_bar(t_prev)");
    const double carry = std::sqrt(std::max(carry_sq, 0.0));
    const double inv_sqrt_ab_t = 1.0 / std::sqrt(ab_t);
    const double noise_coef = std::sqrt(1.0 - ab_t);
    const double sqrt_ab_prev = std::sqrt(ab_prev);
    if (sigma_t > 0.0 && z == nullptr) throw ValidationError("sigma_t > 0 requires a noise tensor");

    Tensor eps_hat = denoiser(x_t, t);
    Tensor out = Tensor::zeros(x_t.dims());
    for (std::size_t j = 0; j < out.size(); ++j) {
        const double x0_hat = (static_cast<double>(x_t[j]) - noise_coef * eps_hat[j]) * inv_sqrt_ab_t;
        double v = sqrt_ab_prev * x0_hat + carry * static_cast<double>(eps_hat[j]);
        if (sigma_t > 0.0) v += sigma_t * static_cast<double>((*z)[j]);
        out[j] = static_cast<float>(v);
    }
    return out;
}

Tensor ddim_sample(const DenoiseFn& denoiser, const Tensor& x_T, const NoiseSchedule& sched, Rng& rng,
                   int steps, double eta) {
    const std::vector<int> taus = sample_substeps(sched.steps(), steps);
    Tensor x = x_T;
    for (std::size_t i = 0; i < taus.size(); ++i) {
        const int t = taus[i];
        const int t_prev = i + 1 < taus.size() ? taus[i + 1] : 0;
        const double sigma = ddim_sigma(sched, t, t_prev, eta);
        if (sigma > 0.0) {
            Tensor z = gaussian_sample(rng, x.dims());
            x = ddim_step(denoiser, x, t, t_prev, sched, sigma, &z);
        } else {
            x = ddim_step(denoiser, x, t, t_prev, sched, 0.0, nullptr);
        }
    }
    return x;
}

DenoiseFn gaussian_oracle_denoiser(double mu, double sigma2, NoiseSchedule sched) {
    if (sigma2 < 0.0) throw ValidationError("sigma2 must be >= 0");
    return [mu, sigma2, sched = std::move(sched)](const Tensor& x_t, int t) {
        const double ab = sched.alpha_bar(t);
        const double sqrt_ab = std::sqrt(ab);
        const double gain = sqrt_ab * sigma2 / (ab * sigma2 + 1.0 - ab);
        const double inv_noise = 1.0 / std::sqrt(1.0 - ab);
        Tensor out = Tensor::zeros(x_t.dims());
        for (std::size_t i = 0; i < out.size(); ++i) {
            const double centered = static_cast<double>(x_t[i]) - sqrt_ab * mu;
            const double x0_post = mu + gain * centered;
            out[i] = static_cast<float>((static_cast<double>(x_t[i]) - sqrt_ab * x0_post) * inv_noise);
        }
        return out;
    };
}

}  // namespace evdiff
