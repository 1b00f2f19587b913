#include "cmcc/constraints.hpp"

#include "cmcc/errors.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <string>

namespace cmcc {

double ConstraintSet::residual(const Vector& W) const
{
    if (W.size() != M())
        throw DimensionError("weight vector has length " + std::to_string(W.size()) +
                             ", constraint set expects " + std::to_string(M()));
    return (C_.transpose() * W - f_).cwiseAbs().maxCoeff();
}

ConstraintSet build_constraints(const Matrix& C, const Vector& f)
{
    const Eigen::Index M = C.rows();
    const Eigen::Index K = C.cols();
    if (M < 2)
        throw DimensionError("constraint matrix needs at least 2 rows, got " + std::to_string(M));
    if (K < 1 || K >= M)
        throw DimensionError("constraint count K=" + std::to_string(K) + " must satisfy 1 <= K < M=" +
                             std::to_string(M));
    if (f.size() != K)
        throw DimensionError("response vector f has length " + std::to_string(f.size()) +
                             ", constraint matrix has " + std::to_string(K) + " columns");
    if (!C.allFinite() || !f.allFinite())
        throw DimensionError("constraint matrix and response must be finite");

    const Matrix gram = C.transpose() * C;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (!(hi > 0.0) || !(lo > 0.0) || hi / lo > kMaxGramCondition)
        throw ConstraintRankError("constraint matrix is rank deficient (cond(C^T C) = " +
                                  (lo > 0.0 ? std::to_string(hi / lo) : std::string("inf")) + ")");

    Eigen::LLT<Matrix> llt(gram);
    if (llt.info() != Eigen::Success)
        throw ConstraintRankError("C^T C is not positive definite");

    const Matrix gram_inv_Ct = llt.solve(C.transpose());
    Matrix P = Matrix::Identity(M, M) - C * gram_inv_Ct;
    P = 0.5 * (P + P.transpose()).eval();
    Vector Q = C * llt.solve(f);
    return ConstraintSet(C, f, std::move(P), std::move(Q));
}

bool check_feasible(const Vector& W, const ConstraintSet& cs, double tol)
{
    return cs.residual(W) <= tol;
}

Matrix linear_phase_constraint_matrix(Eigen::Index M)
{
    if (M < 3 || M % 2 == 0)
        throw ConfigError("linear-phase constraint needs an odd array length >= 3, got " +
                          std::to_string(M));
    const Eigen::Index K = (M - 1) / 2;
    Matrix C = Matrix::Zero(M, K);
    for (Eigen::Index i = 0; i < K; ++i) {
        C(i, i) = 1.0;
        C(M - 1 - i, i) = -1.0;
    }
    return C;
}

} // namespace cmcc
