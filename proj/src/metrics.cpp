#include "mapkit/metrics.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace mapkit {

namespace {

Eigen::MatrixXd fd_jacobian(const SmoothMap& m, const Vec& x, double step) {
    Eigen::MatrixXd J(m.n, m.n);
    for (int j = 0; j < m.n; ++j) {
        Vec xp = x, xm = x;
        xp[j] += step;
        xm[j] -= step;
        Vec fp = m(xp), fm = m(xm);
        for (int i = 0; i < m.n; ++i) J(i, j) = (fp[i] - fm[i]) / (2 * step);
    }
    return J;
}

}  // namespace

C0C1Distance c0_c1_distance(const SmoothMap& A, const SmoothMap& B,
                            const SampleGrid& grid, double fd_step) {
    C0C1Distance d;
    for (const Vec& x : grid.points) {
        d.e0 = std::max(d.e0, dist2(A(x), B(x)));
        Eigen::MatrixXd JA = fd_jacobian(A, x, fd_step);
        Eigen::MatrixXd JB = fd_jacobian(B, x, fd_step);
        d.e1 = std::max(d.e1, (JA - JB).cwiseAbs().maxCoeff());
    }
    return d;
}

double volume_defect(const SmoothMap& A, const SampleGrid& grid, double fd_step) {
    double defect = 0.0;
    for (const Vec& x : grid.points) {
        double det = A.jacobian(x, fd_step).determinant();
        if (!std::isfinite(det)) {
            std::ostringstream os;
            os << "volume_defect: singular Jacobian at (";
            for (std::size_t i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
            os << ")";
            throw std::runtime_error(os.str());
        }
        defect = std::max(defect, std::abs(det - 1.0));
    }
    return defect;
}

}  // namespace mapkit
