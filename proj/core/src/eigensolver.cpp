#include "hadamard/eigensolver.hpp"

#include "hadamard/csv.hpp"
#include "hadamard/error.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>

namespace hadamard {

double norm1(const SparseMatrix& A)
{
    double best = 0.0;
    for (Index j = 0; j < A.outerSize(); ++j) {
        double sum = 0.0;
        for (SparseMatrix::InnerIterator it(A, j); it; ++it) {
            sum += std::abs(it.value());
        }
        best = std::max(best, sum);
    }
    return best;
}

namespace {

Eigen::VectorXd random_vector(Index n, std::mt19937_64& rng)
{
    Eigen::VectorXd x(n);
    for (Index i = 0; i < n; ++i) {
        x(i) = 2.0 * static_cast<double>(rng() >> 11) * 0x1p-53 - 1.0;
    }
    return x;
}

// Final Rayleigh-Ritz on span(X): exact Rayleigh quotients, B-orthonormal
// columns, deterministic signs, residuals.
Spectrum finish(const OperatorPair& op, const Eigen::MatrixXd& X, double nK, double nB)
{
    const Eigen::MatrixXd BX = op.B * X;
    const Eigen::MatrixXd KX = op.K * X;
    Eigen::MatrixXd kk = X.transpose() * KX;
    Eigen::MatrixXd bb = X.transpose() * BX;
    kk = 0.5 * (kk + kk.transpose()).eval();
    bb = 0.5 * (bb + bb.transpose()).eval();
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(kk, bb);
    if (ges.info() != Eigen::Success) {
        throw NumericalFailure("Rayleigh-Ritz projection failed");
    }
    const Index k = X.cols();
    Spectrum s;
    s.bc = op.bc;
    s.values = ges.eigenvalues();
    s.free_modes = X * ges.eigenvectors();
    for (Index j = 0; j < k; ++j) {
        Index imax = 0;
        s.free_modes.col(j).cwiseAbs().maxCoeff(&imax);
        if (s.free_modes(imax, j) < 0.0) {
            s.free_modes.col(j) *= -1.0;
        }
    }
    // one more B-normalisation pass against rounding in the projection
    for (Index j = 0; j < k; ++j) {
        const double nrm = std::sqrt(s.free_modes.col(j).dot(op.B * s.free_modes.col(j)));
        s.free_modes.col(j) /= nrm;
    }
    const Eigen::MatrixXd BV = op.B * s.free_modes;
    const Eigen::MatrixXd KV = op.K * s.free_modes;
    s.residuals.resize(k);
    for (Index j = 0; j < k; ++j) {
        const double lam = s.values(j);
        const double r = (KV.col(j) - lam * BV.col(j)).norm();
        s.residuals(j) = r / ((nK + std::abs(lam) * nB) * s.free_modes.col(j).norm());
    }
    const Eigen::MatrixXd gram = s.free_modes.transpose() * BV;
    s.orthonormality_residual = (gram - Eigen::MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff();
    s.modes.resize(static_cast<Index>(op.vertex_to_free.size()), k);
    for (Index j = 0; j < k; ++j) {
        s.modes.col(j) = op.expand(s.free_modes.col(j));
    }
    return s;
}

Eigen::MatrixXd dense_solve(const OperatorPair& op, Index k)
{
    const Eigen::MatrixXd K(op.K);
    const Eigen::MatrixXd B(op.B);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(K, B);
    if (ges.info() != Eigen::Success) {
        throw NumericalFailure("dense generalized eigensolver failed");
    }
    return ges.eigenvectors().leftCols(k);
}

// Block shift-invert Krylov method with thick restarts. The basis is kept
// B-orthonormal (classical Gram-Schmidt, two passes) and Op*V is stored so
// the projected matrix is formed without extra solves.
class BlockKrylov
{
public:
    BlockKrylov(const OperatorPair& op, Index k, const EigenOptions& opt, double nK, double nB)
        : op_(op)
        , k_(k)
        , opt_(opt)
        , nK_(nK)
        , nB_(nB)
        , n_(op.size())
        , rng_(0x9e3779b97f4a7c15ULL)
    {
        block_ = std::min<Index>(k + 3, n_);
        maxdim_ = k + 3 * block_;
        keep_ = k + block_;
        sigma_ = -1e-6 * nK / nB;
        SparseMatrix A = op.K - sigma_ * op.B;
        ldlt_.compute(A);
        if (ldlt_.info() != Eigen::Success) {
            throw NumericalFailure("factorisation of the shifted stiffness matrix failed");
        }
        V_.resize(n_, maxdim_);
        BV_.resize(n_, maxdim_);
        OpV_.resize(n_, maxdim_);
    }

    Index max_dim() const { return maxdim_; }

    Eigen::MatrixXd run()
    {
        for (Index j = 0; j < block_; ++j) {
            add_or_random(random_vector(n_, rng_));
        }
        apply_op(0, m_);
        Index front = 0;
        double worst = 0.0;
        for (int restart = 0; restart <= opt_.max_restarts; ++restart) {
            while (m_ < maxdim_) {
                const Index count = std::min(block_, m_ - front);
                const Eigen::MatrixXd cand = OpV_.middleCols(front, count);
                const Index begin = m_;
                for (Index j = 0; j < count && m_ < maxdim_; ++j) {
                    add_or_random(cand.col(j));
                }
                if (m_ == begin) {
                    break;
                }
                apply_op(begin, m_);
                front = begin;
            }
            Eigen::MatrixXd H = BV_.leftCols(m_).transpose() * OpV_.leftCols(m_);
            H = 0.5 * (H + H.transpose()).eval();
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
            const Eigen::MatrixXd Y = es.eigenvectors().rowwise().reverse();
            const Eigen::VectorXd theta = es.eigenvalues().reverse();

            const Eigen::MatrixXd X = V_.leftCols(m_) * Y.leftCols(k_);
            const Eigen::MatrixXd KX = op_.K * X;
            const Eigen::MatrixXd BX = op_.B * X;
            worst = 0.0;
            for (Index j = 0; j < k_; ++j) {
                if (!(theta(j) > 0.0)) {
                    throw NumericalFailure("shift-invert iteration produced a non-positive Ritz value");
                }
                const double lam = X.col(j).dot(KX.col(j)) / X.col(j).dot(BX.col(j));
                const double r = (KX.col(j) - lam * BX.col(j)).norm()
                                 / ((nK_ + std::abs(lam) * nB_) * X.col(j).norm());
                worst = std::max(worst, r);
            }
            // margin for the final Rayleigh-Ritz pass
            if (worst <= 0.5 * opt_.tol) {
                return X;
            }
            const Index keep = std::min(keep_, m_);
            V_.leftCols(keep) = (V_.leftCols(m_) * Y.leftCols(keep)).eval();
            BV_.leftCols(keep) = (BV_.leftCols(m_) * Y.leftCols(keep)).eval();
            OpV_.leftCols(keep) = (OpV_.leftCols(m_) * Y.leftCols(keep)).eval();
            m_ = keep;
            front = 0;
        }
        throw NumericalFailure("sparse eigensolver did not converge: worst relative residual "
                               + csv::format_number(worst) + " > " + csv::format_number(opt_.tol));
    }

private:
    bool add(Eigen::VectorXd w)
    {
        const double n0 = std::sqrt(std::max(0.0, w.dot(op_.B * w)));
        if (!(n0 > 0.0) || !std::isfinite(n0)) {
            return false;
        }
        for (int pass = 0; pass < 2; ++pass) {
            if (m_ > 0) {
                const Eigen::VectorXd h = BV_.leftCols(m_).transpose() * w;
                w -= V_.leftCols(m_) * h;
            }
        }
        Eigen::VectorXd Bw = op_.B * w;
        const double nrm = std::sqrt(std::max(0.0, w.dot(Bw)));
        if (!(nrm > 1e-10 * n0)) {
            return false;
        }
        V_.col(m_) = w / nrm;
        BV_.col(m_) = Bw / nrm;
        ++m_;
        return true;
    }

    void add_or_random(const Eigen::VectorXd& w)
    {
        if (add(w)) {
            return;
        }
        for (int attempt = 0; attempt < 4; ++attempt) {
            if (add(random_vector(n_, rng_))) {
                return;
            }
        }
    }

    void apply_op(Index begin, Index end)
    {
        for (Index j = begin; j < end; ++j) {
            OpV_.col(j) = ldlt_.solve(BV_.col(j));
        }
    }

    const OperatorPair& op_;
    Index k_;
    EigenOptions opt_;
    double nK_;
    double nB_;
    Index n_;
    std::mt19937_64 rng_;
    Index block_ = 0;
    Index maxdim_ = 0;
    Index keep_ = 0;
    double sigma_ = 0.0;
    Eigen::SimplicialLDLT<SparseMatrix> ldlt_;
    Eigen::MatrixXd V_, BV_, OpV_;
    Index m_ = 0;
};

} // namespace

Spectrum solve_eigen(const OperatorPair& op, Index k, const EigenOptions& options)
{
    const Index n = op.size();
    if (k < 1) {
        throw InvalidInput("requested eigenpair count must be positive");
    }
    if (k > n) {
        throw InvalidInput("requested " + std::to_string(k) + " eigenpairs but only " + std::to_string(n)
                           + " free degrees of freedom exist");
    }
    const double nK = norm1(op.K);
    const double nB = norm1(op.B);
    if (!(nB > 0.0)) {
        throw InvalidInput("mass matrix is zero");
    }
    Eigen::MatrixXd X;
    const Index block = std::min<Index>(k + 3, n);
    if (n <= options.dense_threshold || k + 3 * block >= n) {
        X = dense_solve(op, k);
    } else {
        BlockKrylov solver(op, k, options, nK, nB);
        X = solver.run();
    }
    Spectrum s = finish(op, X, nK, nB);
    const double worst = s.residuals.maxCoeff();
    if (!(worst <= options.tol) || !(s.orthonormality_residual <= 1e-10)) {
        throw NumericalFailure("eigensolver accuracy not reached: residual " + csv::format_number(worst)
                               + ", orthonormality " + csv::format_number(s.orthonormality_residual));
    }
    return s;
}

std::vector<Cluster> group_multiplets(const Eigen::VectorXd& values, double rel_tol)
{
    std::vector<Cluster> clusters;
    for (Index i = 0; i < values.size(); ++i) {
        if (i > 0 && values(i) - values(i - 1) < rel_tol * (1.0 + std::abs(values(i - 1)))) {
            clusters.back().push_back(i);
        } else {
            clusters.push_back({i});
        }
    }
    return clusters;
}

std::vector<Cluster> group_multiplets(const Spectrum& spectrum, double rel_tol)
{
    return group_multiplets(spectrum.values, rel_tol);
}

Cluster cluster_near(const Spectrum& spectrum, double target, double rel_tol)
{
    const auto clusters = group_multiplets(spectrum, rel_tol);
    if (clusters.empty()) {
        throw InvalidInput("empty spectrum");
    }
    const Cluster* best = nullptr;
    double best_dist = 0.0;
    for (const auto& c : clusters) {
        double mean = 0.0;
        for (Index i : c) {
            mean += spectrum.values(i);
        }
        mean /= static_cast<double>(c.size());
        const double dist = std::abs(mean - target);
        if (!best || dist < best_dist) {
            best = &c;
            best_dist = dist;
        }
    }
    return *best;
}

std::string spectrum_csv(const Spectrum& spectrum, double rel_tol)
{
    csv::Table table({"index", "lambda", "cluster_id", "residual"});
    const auto clusters = group_multiplets(spectrum, rel_tol);
    for (std::size_t c = 0; c < clusters.size(); ++c) {
        for (Index i : clusters[c]) {
            table.add_row({std::to_string(i), csv::format_number(spectrum.values(i)), std::to_string(c),
                           csv::format_number(spectrum.residuals(i))});
        }
    }
    return table.str();
}

} // namespace hadamard
