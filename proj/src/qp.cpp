#include "awareplan/qp.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <limits>
#include <vector>

namespace awareplan::qp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEps = std::numeric_limits<double>::epsilon();

// Active-set factorization: J = L^{-T} Q and the upper-triangular R with
// Q^T N = [R; 0] for the active constraint normals N.
class Factorization {
public:
    Factorization(const Eigen::MatrixXd& j0) : J(j0), R(Eigen::MatrixXd::Zero(j0.rows(), j0.rows())) {}

    // Appends a normal whose transformed image is d = J' n. Returns false when
    // it is linearly dependent on the active set.
    bool add(Eigen::VectorXd& d, int& iq) {
        const int n = static_cast<int>(J.rows());
        for (int j = n - 1; j >= iq + 1; --j) {
            double cc = d[j - 1];
            double ss = d[j];
            const double h = std::hypot(cc, ss);
            if (h == 0.0) {
                continue;
            }
            d[j] = 0.0;
            ss /= h;
            cc /= h;
            if (cc < 0.0) {
                cc = -cc;
                ss = -ss;
                d[j - 1] = -h;
            } else {
                d[j - 1] = h;
            }
            const double xny = ss / (1.0 + cc);
            for (int k = 0; k < n; ++k) {
                const double t1 = J(k, j - 1);
                const double t2 = J(k, j);
                J(k, j - 1) = t1 * cc + t2 * ss;
                J(k, j) = xny * (t1 + J(k, j - 1)) - t2;
            }
        }
        ++iq;
        for (int i = 0; i < iq; ++i) {
            R(i, iq - 1) = d[i];
        }
        if (std::abs(d[iq - 1]) <= kEps * r_norm) {
            return false;
        }
        r_norm = std::max(r_norm, std::abs(d[iq - 1]));
        return true;
    }

    // Removes active-set position qq, shifting later entries of `active` and `u`
    // (including the pending entry at index iq) down by one.
    void remove(int qq, std::vector<int>& active, Eigen::VectorXd& u, int& iq) {
        const int n = static_cast<int>(J.rows());
        for (int i = qq; i < iq - 1; ++i) {
            active[i] = active[i + 1];
            u[i] = u[i + 1];
            R.col(i) = R.col(i + 1);
        }
        active[iq - 1] = active[iq];
        u[iq - 1] = u[iq];
        active[iq] = -1;
        u[iq] = 0.0;
        for (int j = 0; j < iq; ++j) {
            R(j, iq - 1) = 0.0;
        }
        --iq;
        if (iq == 0) {
            return;
        }
        for (int j = qq; j < iq; ++j) {
            double cc = R(j, j);
            double ss = R(j + 1, j);
            const double h = std::hypot(cc, ss);
            if (h == 0.0) {
                continue;
            }
            cc /= h;
            ss /= h;
            R(j + 1, j) = 0.0;
            if (cc < 0.0) {
                R(j, j) = -h;
                cc = -cc;
                ss = -ss;
            } else {
                R(j, j) = h;
            }
            const double xny = ss / (1.0 + cc);
            for (int k = j + 1; k < iq; ++k) {
                const double t1 = R(j, k);
                const double t2 = R(j + 1, k);
                R(j, k) = t1 * cc + t2 * ss;
                R(j + 1, k) = xny * (t1 + R(j, k)) - t2;
            }
            for (int k = 0; k < n; ++k) {
                const double t1 = J(k, j);
                const double t2 = J(k, j + 1);
                J(k, j) = t1 * cc + t2 * ss;
                J(k, j + 1) = xny * (J(k, j) + t1) - t2;
            }
        }
    }

    Eigen::MatrixXd J;
    Eigen::MatrixXd R;
    double r_norm = 1.0;
};

}  // namespace

Result solve(const Eigen::MatrixXd& G, const Eigen::VectorXd& g, const Eigen::MatrixXd& A,
             const Eigen::VectorXd& b) {
    const int n = static_cast<int>(G.rows());
    const int m = static_cast<int>(A.rows());
    Result res;

    Eigen::LLT<Eigen::MatrixXd> llt(G);
    if (llt.info() != Eigen::Success) {
        res.status = Status::NotPositiveDefinite;
        return res;
    }
    const Eigen::MatrixXd L = llt.matrixL();
    const Eigen::MatrixXd Linv = L.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(n, n));
    Factorization fac(Linv.transpose());

    Eigen::VectorXd x = -llt.solve(g);
    const double scale = 1.0 + (m > 0 ? b.cwiseAbs().maxCoeff() : 0.0);
    const double feas_tol = 1e-11 * scale;

    std::vector<int> active(m + 1, -1);
    Eigen::VectorXd u = Eigen::VectorXd::Zero(m + 1);
    std::vector<bool> excluded(m, false);
    int iq = 0;

    Eigen::VectorXd d(n), z(n), r(m + 1), s(m);
    const int max_iter = 50 * (m + n) + 100;
    int iter = 0;

    auto is_active = [&](int c) {
        for (int i = 0; i < iq; ++i) {
            if (active[i] == c) return true;
        }
        return false;
    };

    while (true) {
        if (++iter > max_iter) {
            res.status = Status::Infeasible;
            return res;
        }
        // Step 1: pick the most violated inactive constraint.
        s = A * x - b;
        int ip = -1;
        double worst = -feas_tol;
        for (int i = 0; i < m; ++i) {
            if (!excluded[i] && s[i] < worst && !is_active(i)) {
                worst = s[i];
                ip = i;
            }
        }
        if (ip < 0) {
            break;
        }
        const std::vector<int> active_old(active.begin(), active.end());
        const Eigen::VectorXd u_old = u;
        const Eigen::VectorXd x_old = x;
        const Factorization fac_old = fac;
        const int iq_old = iq;

        const Eigen::VectorXd np = A.row(ip).transpose();
        u[iq] = 0.0;
        active[iq] = ip;
        double s_ip = s[ip];

        while (true) {
            if (++iter > max_iter) {
                res.status = Status::Infeasible;
                return res;
            }
            // Step 2a: primal and dual search directions.
            d = fac.J.transpose() * np;
            z = fac.J.rightCols(n - iq) * d.tail(n - iq);
            for (int i = iq - 1; i >= 0; --i) {
                double sum = d[i];
                for (int j = i + 1; j < iq; ++j) {
                    sum -= fac.R(i, j) * r[j];
                }
                r[i] = sum / fac.R(i, i);
            }
            // Step 2b: partial (dual) and full (primal) step lengths.
            double t1 = kInf;
            int drop = -1;
            for (int k = 0; k < iq; ++k) {
                if (r[k] > 0.0 && u[k] / r[k] < t1) {
                    t1 = u[k] / r[k];
                    drop = k;
                }
            }
            double t2 = kInf;
            if (z.squaredNorm() > kEps) {
                t2 = -s_ip / z.dot(np);
            }
            const double t = std::min(t1, t2);
            if (!std::isfinite(t)) {
                res.status = Status::Infeasible;
                return res;
            }
            if (!std::isfinite(t2)) {
                // Dual step only.
                for (int k = 0; k < iq; ++k) u[k] -= t * r[k];
                u[iq] += t;
                fac.remove(drop, active, u, iq);
                continue;
            }
            x += t * z;
            for (int k = 0; k < iq; ++k) u[k] -= t * r[k];
            u[iq] += t;
            if (t == t2) {
                if (!fac.add(d, iq)) {
                    // Dependent normal: discard this candidate and retry from the saved state.
                    excluded[ip] = true;
                    active.assign(active_old.begin(), active_old.end());
                    u = u_old;
                    x = x_old;
                    fac = fac_old;
                    iq = iq_old;
                }
                break;
            }
            fac.remove(drop, active, u, iq);
            s_ip = np.dot(x) - b[ip];
        }
    }

    // Constraints skipped as dependent must still hold at the solution.
    if (m > 0) {
        s = A * x - b;
        for (int i = 0; i < m; ++i) {
            if (s[i] < -1e-7 * scale) {
                res.status = Status::Infeasible;
                return res;
            }
        }
    }
    res.status = Status::Optimal;
    res.x = x;
    res.objective = 0.5 * x.dot(G * x) + g.dot(x);
    res.active_constraints = iq;
    return res;
}

}  // namespace awareplan::qp
