#include "cmcc/filters.hpp"

#include "cmcc/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <string>

namespace cmcc {

std::string_view to_string(Algorithm a) noexcept
{
    switch (a) {
    case Algorithm::CMCC: return "CMCC";
    case Algorithm::CLMS: return "CLMS";
    case Algorithm::CAP: return "CAP";
    case Algorithm::CRLS: return "CRLS";
    }
    return "?";
}

Algorithm parse_algorithm(std::string_view name)
{
    std::string up(name);
    std::transform(up.begin(), up.end(), up.begin(), [](unsigned char c) { return std::toupper(c); });
    if (up == "CMCC") return Algorithm::CMCC;
    if (up == "CLMS") return Algorithm::CLMS;
    if (up == "CAP") return Algorithm::CAP;
    if (up == "CRLS") return Algorithm::CRLS;
    throw ConfigError("unknown algorithm '" + std::string(name) + "'");
}

void validate(Algorithm algo, const HyperParams& hp)
{
    const auto name = std::string(to_string(algo));
    switch (algo) {
    case Algorithm::CMCC:
        if (!(hp.sigma > 0.0) || !std::isfinite(hp.sigma))
            throw ConfigError(name + ": kernel bandwidth sigma must be positive");
        [[fallthrough]];
    case Algorithm::CLMS:
        if (!(hp.eta >= 0.0) || !std::isfinite(hp.eta))
            throw ConfigError(name + ": step size eta must be non-negative");
        break;
    case Algorithm::CAP:
        if (!(hp.eta >= 0.0) || !std::isfinite(hp.eta))
            throw ConfigError(name + ": step size eta must be non-negative");
        if (hp.window < 1)
            throw ConfigError(name + ": window length L must be >= 1");
        if (!(hp.ap_regularization > 0.0))
            throw ConfigError(name + ": regularization must be positive");
        break;
    case Algorithm::CRLS:
        if (!(hp.forgetting > 0.0 && hp.forgetting <= 1.0))
            throw ConfigError(name + ": forgetting factor must lie in (0, 1]");
        if (!(hp.crls_delta > 0.0))
            throw ConfigError(name + ": delta must be positive");
        break;
    }
}

FilterState init_filter(std::shared_ptr<const ConstraintSet> cs, Algorithm algo, const HyperParams& hp)
{
    if (!cs)
        throw ConfigError("init_filter: missing constraint set");
    validate(algo, hp);

    FilterState s;
    const auto M = cs->M();
    s.cs_ = std::move(cs);
    s.algo_ = algo;
    s.hp_ = hp;
    s.W_ = s.cs_->Q();
    s.scratch_.resize(M);

    if (algo == Algorithm::CAP) {
        s.win_x_ = Matrix::Zero(M, hp.window);
        s.win_d_ = Vector::Zero(hp.window);
    }
    if (algo == Algorithm::CRLS) {
        s.phi_inv_ = Matrix::Identity(M, M) / hp.crls_delta;
        s.gain_.resize(M);
        s.phi_inv_C_.resize(M, s.cs_->K());
    }
    return s;
}

bool FilterState::commit()
{
    if (!scratch_.allFinite()) {
        diverged_at_ = n_;
        return false;
    }
    W_.swap(scratch_);
    return true;
}

namespace {

void check_inputs(const FilterState& s, const Vector& x, double d, Algorithm expected)
{
    if (s.algo() != expected)
        throw ConfigError("step for " + std::string(to_string(expected)) + " called on a " +
                          std::string(to_string(s.algo())) + " state");
    if (x.size() != s.weights().size())
        throw DimensionError("input vector has length " + std::to_string(x.size()) + ", filter has " +
                             std::to_string(s.weights().size()) + " taps");
    if (!x.allFinite() || !std::isfinite(d))
        throw InputError("non-finite input sample");
}

} // namespace

// Shared body of CMCC and CLMS: one P matrix-vector product plus O(M) work.
double projected_gradient_step(FilterState& s, const Vector& x, double d, bool correntropy)
{
    const double e = d - s.W_.dot(x);
    if (s.diverged())
        return e;
    ++s.n_;
    const double g = correntropy ? gaussian_gain(e, s.hp_.sigma) : 1.0;
    // scratch = W + eta g e x, then W = P scratch + Q
    s.scratch_ = s.W_;
    s.scratch_.noalias() += (s.hp_.eta * g * e) * x;
    s.gain_.resize(s.scratch_.size());
    s.gain_.noalias() = s.cs_->P() * s.scratch_;
    s.scratch_ = s.gain_ + s.cs_->Q();
    s.commit();
    return e;
}

double cmcc_step(FilterState& s, const Vector& x, double d)
{
    check_inputs(s, x, d, Algorithm::CMCC);
    return projected_gradient_step(s, x, d, true);
}

double clms_step(FilterState& s, const Vector& x, double d)
{
    check_inputs(s, x, d, Algorithm::CLMS);
    return projected_gradient_step(s, x, d, false);
}

double cap_step(FilterState& s, const Vector& x, double d)
{
    check_inputs(s, x, d, Algorithm::CAP);
    const double e = d - s.W_.dot(x);
    if (s.diverged())
        return e;
    ++s.n_;

    const int L = s.hp_.window;
    s.win_head_ = (s.win_head_ + L - 1) % L;
    s.win_x_.col(s.win_head_) = x;
    s.win_d_(s.win_head_) = d;
    s.win_fill_ = std::min(s.win_fill_ + 1, L);

    // Column order inside the window does not affect A (A^T A + eps I)^{-1} E.
    const int fill = s.win_fill_;
    Matrix A(s.W_.size(), fill);
    Vector E(fill);
    for (int j = 0; j < fill; ++j) {
        const int col = (s.win_head_ + j) % L;
        A.col(j) = s.win_x_.col(col);
        E(j) = s.win_d_(col) - s.W_.dot(A.col(j));
    }
    Matrix gram = A.transpose() * A;
    gram.diagonal().array() += s.hp_.ap_regularization;
    const Vector coeff = gram.ldlt().solve(E);

    s.scratch_ = s.W_;
    s.scratch_.noalias() += s.hp_.eta * (A * coeff);
    Vector projected = s.cs_->P() * s.scratch_;
    s.scratch_ = projected + s.cs_->Q();
    s.commit();
    return e;
}

double crls_step(FilterState& s, const Vector& x, double d)
{
    check_inputs(s, x, d, Algorithm::CRLS);
    const double e = d - s.W_.dot(x);
    if (s.diverged())
        return e;
    ++s.n_;

    const double lambda = s.hp_.forgetting;
    const Matrix& C = s.cs_->C();

    // Matrix inversion lemma: k = Phi^{-1} x / (lambda + x^T Phi^{-1} x),
    // Phi^{-1} <- (Phi^{-1} - k x^T Phi^{-1}) / lambda.
    Vector pix = s.phi_inv_ * x;
    const double denom = lambda + x.dot(pix);
    s.gain_ = pix / denom;
    s.phi_inv_.noalias() -= s.gain_ * pix.transpose();
    s.phi_inv_ /= lambda;
    s.phi_inv_ = (0.5 * (s.phi_inv_ + s.phi_inv_.transpose())).eval();

    // RLS estimate from the previous constrained solution, then the
    // Phi^{-1}-weighted projection W = W_rls + Phi^{-1} C (C^T Phi^{-1} C)^{-1} (f - C^T W_rls).
    s.scratch_ = s.W_ + e * s.gain_;
    s.phi_inv_C_.noalias() = s.phi_inv_ * C;
    const Matrix ct_phi_c = C.transpose() * s.phi_inv_C_;
    const Vector mismatch = s.cs_->f() - C.transpose() * s.scratch_;
    s.scratch_.noalias() += s.phi_inv_C_ * ct_phi_c.ldlt().solve(mismatch);
    if (!s.phi_inv_.allFinite())
        s.scratch_(0) = std::numeric_limits<double>::quiet_NaN();
    s.commit();
    return e;
}

double step(FilterState& s, const Vector& x, double d)
{
    switch (s.algo()) {
    case Algorithm::CMCC: return cmcc_step(s, x, d);
    case Algorithm::CLMS: return clms_step(s, x, d);
    case Algorithm::CAP: return cap_step(s, x, d);
    case Algorithm::CRLS: return crls_step(s, x, d);
    }
    return 0.0;
}

} // namespace cmcc
