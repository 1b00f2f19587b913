#pragma once

#include "cmcc/constraints.hpp"
#include "cmcc/types.hpp"

#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

namespace cmcc {

enum class Algorithm { CMCC, CLMS, CAP, CRLS };

std::string_view to_string(Algorithm a) noexcept;
/// Case-insensitive; throws ConfigError for unknown names.
Algorithm parse_algorithm(std::string_view name);

struct HyperParams {
    double eta = 0.01;        // step size (CMCC, CLMS, CAP)
    double sigma = 1.0;       // kernel bandwidth (CMCC)
    int window = 4;           // sliding window length L (CAP)
    double forgetting = 0.998; // lambda (CRLS)
    double ap_regularization = 1e-6;
    double crls_delta = 1e-2;  // Phi^{-1}(0) = I / delta
};

/// Throws ConfigError if a field used by `algo` is out of range.
void validate(Algorithm algo, const HyperParams& hp);

/// Gaussian kernel gain exp(-e^2 / (2 sigma^2)), always in (0, 1] for finite e.
inline double gaussian_gain(double e, double sigma) noexcept
{
    return std::exp(-(e * e) / (2.0 * sigma * sigma));
}

/// Weight vector plus per-algorithm carry. Single owner; not thread safe.
class FilterState {
public:
    Algorithm algo() const noexcept { return algo_; }
    const HyperParams& params() const noexcept { return hp_; }
    const ConstraintSet& constraints() const noexcept { return *cs_; }
    const Vector& weights() const noexcept { return W_; }
    long iteration() const noexcept { return n_; }
    bool diverged() const noexcept { return diverged_at_.has_value(); }
    std::optional<long> diverged_at() const noexcept { return diverged_at_; }

    // CAP window occupancy, min(n, L).
    int window_fill() const noexcept { return win_fill_; }
    const Matrix& inverse_correlation() const noexcept { return phi_inv_; }

private:
    friend FilterState init_filter(std::shared_ptr<const ConstraintSet>, Algorithm, const HyperParams&);
    friend double cmcc_step(FilterState&, const Vector&, double);
    friend double clms_step(FilterState&, const Vector&, double);
    friend double cap_step(FilterState&, const Vector&, double);
    friend double crls_step(FilterState&, const Vector&, double);
    friend double projected_gradient_step(FilterState&, const Vector&, double, bool);

    FilterState() = default;
    bool commit(); // checks finiteness of scratch_ and swaps it into W_

    std::shared_ptr<const ConstraintSet> cs_;
    Algorithm algo_ = Algorithm::CMCC;
    HyperParams hp_;
    Vector W_;
    Vector scratch_;
    long n_ = 0;
    std::optional<long> diverged_at_;

    // CAP
    Matrix win_x_;
    Vector win_d_;
    int win_head_ = 0;
    int win_fill_ = 0;

    // CRLS
    Matrix phi_inv_;
    Vector gain_;
    Matrix phi_inv_C_;
};

/// W(0) = Q; CAP starts with an empty window, CRLS with Phi^{-1} = I / delta.
FilterState init_filter(std::shared_ptr<const ConstraintSet> cs, Algorithm algo, const HyperParams& hp);

// Each step consumes one (x, d) pair, returns the a-priori error
// e(n) = d - W(n-1)^T x and updates the state in place. Non-finite inputs
// throw InputError; a non-finite update marks the state diverged and leaves
// W at its last finite value. Steps on a diverged state are no-ops.

/// W(n) = P [W(n-1) + eta g(e) e x] + Q
double cmcc_step(FilterState& state, const Vector& x, double d);
/// W(n) = P [W(n-1) + eta e x] + Q
double clms_step(FilterState& state, const Vector& x, double d);
/// W(n) = P [W(n-1) + eta A (A^T A + eps I)^{-1} E] + Q over the last L samples.
double cap_step(FilterState& state, const Vector& x, double d);
/// Exponentially weighted RLS gain followed by the Phi^{-1}-weighted
/// projection onto {W : C^T W = f}.
double crls_step(FilterState& state, const Vector& x, double d);

/// Dispatches on state.algo().
double step(FilterState& state, const Vector& x, double d);

} // namespace cmcc
