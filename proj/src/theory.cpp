#include "cmcc/theory.hpp"

#include "cmcc/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace cmcc {

Matrix kron(const Matrix& a, const Matrix& b)
{
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

Vector vec(const Matrix& a)
{
    return Eigen::Map<const Vector>(a.data(), a.size());
}

void validate_covariance(const Matrix& R)
{
    if (R.rows() != R.cols())
        throw DimensionError("covariance matrix must be square");
    if (!R.allFinite())
        throw ConfigError("covariance matrix has non-finite entries");
    if ((R - R.transpose()).cwiseAbs().maxCoeff() > 1e-10)
        throw ConfigError("covariance matrix is not symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> eig(R, Eigen::EigenvaluesOnly);
    if (!(eig.eigenvalues().minCoeff() > 0.0))
        throw ConfigError("covariance matrix is not positive definite");
}

OptimalWeights optimal_weights(const Matrix& R, const ConstraintSet& cs, const Vector& W_true)
{
    if (R.rows() != cs.M() || W_true.size() != cs.M())
        throw DimensionError("covariance, constraint and weight dimensions disagree");
    validate_covariance(R);

    const Matrix& C = cs.C();
    Eigen::LLT<Matrix> r_llt(R);
    const Matrix Rinv_C = r_llt.solve(C);
    const Matrix gram = C.transpose() * Rinv_C;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (!(lo > 0.0) || hi / lo > kMaxGramCondition)
        throw ConstraintRankError("C^T R^{-1} C is singular");

    OptimalWeights out;
    out.eps_w = Rinv_C * gram.llt().solve(C.transpose() * W_true - cs.f());
    out.W_opt = W_true - out.eps_w;
    return out;
}

StabilityBound stability_bound(const Matrix& R, const ConstraintSet& cs)
{
    if (R.rows() != cs.M())
        throw DimensionError("covariance and constraint dimensions disagree");
    validate_covariance(R);
    StabilityBound b;
    b.Upsilon = cs.P() * R * cs.P();
    b.Upsilon = (0.5 * (b.Upsilon + b.Upsilon.transpose())).eval();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(b.Upsilon, Eigen::EigenvaluesOnly);
    b.lambda_max = eig.eigenvalues().maxCoeff();
    b.trace = b.Upsilon.trace();
    b.eta_max = 2.0 / (2.0 * b.lambda_max + b.trace);
    return b;
}

LimitingGains limiting_gains(const TheoryInputs& in, const Vector& eps_w, GainPath path)
{
    if (!(in.sigma > 0.0))
        throw ConfigError("kernel bandwidth must be positive");
    const double excess = eps_w.dot(in.R * eps_w);
    if (path == GainPath::Auto)
        path = is_gaussian(in.noise) ? GainPath::Gaussian : GainPath::Taylor;

    LimitingGains out;
    out.path = path;
    const double s2 = in.sigma * in.sigma;
    if (path == GainPath::Gaussian) {
        if (!is_gaussian(in.noise))
            throw ConfigError("Gaussian gain formula requested for " + noise_type_name(in.noise) + " noise");
        const double var = *second_moment(in.noise);
        out.Eg = in.sigma / std::sqrt(s2 + excess + var);
        out.Eg2 = in.sigma / std::sqrt(s2 + 2.0 * excess + 2.0 * var);
    } else {
        if (!second_moment(in.noise))
            throw InfiniteMomentError(describe(in.noise) +
                                      " noise has infinite variance; the Taylor-expanded gains do not apply");
        const auto m = [&](Moment k) { return noise_moment(in.noise, k, in.sigma).value; };
        out.Eg = m(Moment::Gain) + 0.5 * excess * m(Moment::GainCurvature);
        out.Eg2 = m(Moment::GainSquared) + excess * m(Moment::GainSquaredCurvature);
    }
    constexpr double floor = 1e-300;
    out.Eg = std::clamp(out.Eg, floor, 1.0);
    out.Eg2 = std::clamp(out.Eg2, floor, 1.0);
    return out;
}

Matrix f_matrix(const Matrix& R, const ConstraintSet& cs, double eta, double Eg, double Eg2)
{
    const auto M = cs.M();
    if (R.rows() != M || R.cols() != M)
        throw DimensionError("covariance and constraint dimensions disagree");
    const Matrix& P = cs.P();
    const Matrix I = Matrix::Identity(M, M);
    const Matrix A = (I - eta * Eg * R) * P;
    const Matrix RP = R * P;
    const Matrix Upsilon = P * R * P;
    const double eta2 = eta * eta;

    Matrix F = kron(A, A);
    F += (2.0 * eta2 * Eg2 - eta2 * Eg * Eg) * kron(RP, RP);
    F.noalias() += (eta2 * Eg2) * vec(R) * vec(Upsilon).transpose();
    return F;
}

SteadyStatePrediction steady_state_msd(const TheoryInputs& in, GainPath path)
{
    const auto M = in.cs.M();
    const auto bound = stability_bound(in.R, in.cs);
    if (!(in.eta > 0.0) || !(in.eta < bound.eta_max)) {
        std::ostringstream os;
        os << "step size eta=" << in.eta << " is outside the mean-square stability range (0, "
           << bound.eta_max << ") given by 2/(2 lambda_max + tr{PRP})";
        throw InstabilityError(os.str(), bound.eta_max);
    }

    SteadyStatePrediction out;
    const auto opt = optimal_weights(in.R, in.cs, in.W_true);
    out.W_opt = opt.W_opt;
    out.eps_w = opt.eps_w;
    out.excess = opt.eps_w.dot(in.R * opt.eps_w);

    const auto gains = limiting_gains(in, opt.eps_w, path);
    out.Eg = gains.Eg;
    out.Eg2 = gains.Eg2;
    out.path = gains.path;
    if (gains.path == GainPath::Gaussian)
        out.noise_power = *second_moment(in.noise);
    else
        out.noise_power = noise_moment(in.noise, Moment::Variance, in.sigma).value;

    out.eta_max = bound.eta_max;
    out.eta_max_with_gains = 2.0 * out.Eg / ((2.0 * bound.lambda_max + bound.trace) * out.Eg2);
    out.Upsilon = bound.Upsilon;
    out.F = f_matrix(in.R, in.cs, in.eta, out.Eg, out.Eg2);

    Eigen::EigenSolver<Matrix> eig(out.F, false);
    out.spectral_radius = eig.eigenvalues().cwiseAbs().maxCoeff();

    const Matrix I_minus_F = Matrix::Identity(M * M, M * M) - out.F;
    const Vector vec_I = vec(Matrix::Identity(M, M));
    Eigen::FullPivLU<Matrix> lu(I_minus_F);
    const Vector t = lu.solve(vec_I);
    const double residual = (I_minus_F * t - vec_I).norm() / vec_I.norm();
    if (!lu.isInvertible() || !t.allFinite() || residual > 1e-10 || out.spectral_radius >= 1.0) {
        std::ostringstream os;
        os << "I - F is singular at eta=" << in.eta << " (spectral radius of F = " << out.spectral_radius
           << ")";
        throw InstabilityError(os.str(), bound.eta_max);
    }

    out.S = in.eta * in.eta * (out.excess + out.noise_power) * vec(out.Upsilon).dot(t) * out.Eg2;
    return out;
}

} // namespace cmcc
