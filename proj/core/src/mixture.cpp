#include "micc/mixture.hpp"

#include "micc/color.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

namespace micc {

void ProbabilityMap::validate() const {
    if (data.size() != pixel_count() * size_t(n))
        throw ShapeError("probability map buffer size mismatch");
    for (size_t p = 0; p < pixel_count(); ++p) {
        double sum = 0.0;
        for (int i = 0; i < n; ++i) {
            float w = data[p * n + i];
            if (!(w >= 0.0f && w <= 1.0f))
                throw ValueRangeError("probability weight outside [0,1]");
            sum += double(w);
        }
        if (std::abs(sum - 1.0) > 1e-6)
            throw ValueRangeError("probability weights do not sum to 1");
    }
}

size_t repair_simplex(ProbabilityMap &p, double tol) {
    size_t repaired = 0;
    for (size_t px = 0; px < p.pixel_count(); ++px) {
        int x = int(px % size_t(p.width));
        int y = int(px / size_t(p.width));
        double sum = 0.0;
        for (int i = 0; i < p.n; ++i) {
            float &w = p.data[px * p.n + i];
            if (!std::isfinite(w) || w < -tol || w > 1.0 + tol)
                throw FormatError("probability weight out of range at pixel (" +
                                  std::to_string(x) + "," + std::to_string(y) +
                                  ")");
            if (w < 0.0f)
                w = 0.0f;
            sum += double(w);
        }
        if (std::abs(sum - 1.0) > tol)
            throw FormatError("probability row sums to " + std::to_string(sum) +
                              " at pixel (" + std::to_string(x) + "," +
                              std::to_string(y) + ")");
        if (std::abs(sum - 1.0) > 1e-6)
            ++repaired;
        if (sum > 0.0)
            for (int i = 0; i < p.n; ++i)
                p.data[px * p.n + i] = float(double(p.data[px * p.n + i]) / sum);
    }
    return repaired;
}

IlluminationMap reconstruct_illumination(const ProbabilityMap &p,
                                         const SeedSet &seeds) {
    if (p.n != seeds.n_illuminants())
        throw ShapeError("reconstruct_illumination: illuminant count mismatch");
    if (p.width != seeds.width || p.height != seeds.height)
        throw ShapeError("reconstruct_illumination: raster dimensions differ");
    IlluminationMap out(p.width, p.height);
    for (int y = 0; y < p.height; ++y) {
        for (int x = 0; x < p.width; ++x) {
            double r = 0.0, g = 0.0, b = 0.0;
            for (int i = 0; i < p.n; ++i) {
                double w = double(p.at(x, y, i));
                const Illuminant &c = seeds.groups[size_t(i)].color;
                r += w * c.r;
                g += w * c.g;
                b += w * c.b;
            }
            out.set_pixel(x, y, r, g, b);
        }
    }
    return out;
}

double l1_image_distance(const Raster3 &a, const Raster3 &b) {
    if (!a.same_shape(b))
        throw ShapeError("l1_image_distance: raster dimensions differ");
    detail::CompensatedSum sum;
    const auto &da = a.data();
    const auto &db = b.data();
    for (size_t i = 0; i < da.size(); ++i)
        sum.add(std::abs(double(da[i]) - double(db[i])));
    return sum.value() / double(a.pixel_count());
}

double mask_loss(const IlluminationMap &pred, const SeedSet &seeds) {
    if (pred.width() != seeds.width || pred.height() != seeds.height)
        throw ShapeError("mask_loss: raster dimensions differ");
    detail::CompensatedSum total;
    for (const auto &group : seeds.groups) {
        detail::CompensatedSum per_mask;
        for (const auto &pt : group.points) {
            auto p = pred.pixel(pt.x, pt.y);
            per_mask.add(std::abs(p[0] - group.color.r) +
                         std::abs(p[1] - group.color.g) +
                         std::abs(p[2] - group.color.b));
        }
        total.add(per_mask.value() / double(group.points.size()));
    }
    return total.value();
}

LossReport total_loss(const IlluminationMap &gt_illum,
                      const ProbabilityMap &pred_p, const LinearImage &biased,
                      const LinearImage &gt_white, const SeedSet &seeds,
                      double lambda) {
    if (!(lambda > 0.0))
        throw ConfigError("lambda must be > 0");
    IlluminationMap recon = reconstruct_illumination(pred_p, seeds);
    LossReport r;
    r.illum = l1_image_distance(recon, gt_illum);
    r.rgb = l1_image_distance(von_kries_correct(biased, recon), gt_white);
    r.masks = mask_loss(recon, seeds);
    r.lambda = lambda;
    r.total_supervised = lambda * (r.illum + r.rgb + r.masks);
    return r;
}

namespace {

// Exact least squares on a fixed support, optionally with the sum-to-one
// equality constraint (KKT system). Solved with a complete orthogonal
// decomposition so rank-deficient supports yield minimal-norm solutions.
struct SupportSolvers {
    std::vector<int> cols;
    Eigen::MatrixXd As; // 3 x |S|
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> ls;  // A_S
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> kkt; // sum = 1
};

struct SimplexSolver {
    Eigen::MatrixXd A; // 3 x N seed colors
    std::vector<SupportSolvers> supports;
    bool degenerate = false;

    explicit SimplexSolver(const SeedSet &seeds) {
        const int n = seeds.n_illuminants();
        A.resize(3, n);
        for (int i = 0; i < n; ++i) {
            const Illuminant &c = seeds.groups[size_t(i)].color;
            A.col(i) << c.r, c.g, c.b;
        }

        Eigen::MatrixXd M(4, n);
        M.topRows(3) = A;
        M.row(3).setOnes();
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
        double tol = 1e-9 * svd.singularValues()(0);
        int rank = 0;
        for (int i = 0; i < svd.singularValues().size(); ++i)
            rank += svd.singularValues()(i) > tol;
        degenerate = rank < std::min(4, n);

        for (unsigned mask = 1; mask < (1u << n); ++mask) {
            SupportSolvers s;
            for (int i = 0; i < n; ++i)
                if (mask & (1u << i))
                    s.cols.push_back(i);
            int m = int(s.cols.size());
            s.As.resize(3, m);
            for (int j = 0; j < m; ++j)
                s.As.col(j) = A.col(s.cols[size_t(j)]);
            s.ls.compute(s.As);
            Eigen::MatrixXd K(m + 1, m + 1);
            K.topLeftCorner(m, m) = 2.0 * s.As.transpose() * s.As;
            K.topRightCorner(m, 1).setOnes();
            K.bottomLeftCorner(1, m).setOnes();
            K(m, m) = 0.0;
            s.kkt.compute(K);
            supports.push_back(std::move(s));
        }
    }

    // Non-negative least squares by support enumeration.
    Eigen::VectorXd nnls(const Eigen::Vector3d &b) const {
        const int n = int(A.cols());
        Eigen::VectorXd best = Eigen::VectorXd::Zero(n);
        double best_res = b.squaredNorm(); // empty support
        for (const auto &s : supports) {
            Eigen::VectorXd ps = s.ls.solve(b);
            if ((ps.array() < -1e-12).any())
                continue;
            double res = (s.As * ps - b).squaredNorm();
            if (res < best_res - 1e-15) {
                best_res = res;
                best.setZero();
                for (size_t j = 0; j < s.cols.size(); ++j)
                    best(s.cols[j]) = std::max(0.0, ps(long(j)));
            }
        }
        return best;
    }

    // Simplex-constrained least squares by support enumeration.
    Eigen::VectorXd simplex(const Eigen::Vector3d &b) const {
        const int n = int(A.cols());
        Eigen::VectorXd best = Eigen::VectorXd::Zero(n);
        double best_res = std::numeric_limits<double>::max();
        for (const auto &s : supports) {
            int m = int(s.cols.size());
            Eigen::VectorXd rhs(m + 1);
            rhs.head(m) = 2.0 * s.As.transpose() * b;
            rhs(m) = 1.0;
            Eigen::VectorXd sol = s.kkt.solve(rhs);
            Eigen::VectorXd ps = sol.head(m);
            if ((ps.array() < -1e-9).any())
                continue;
            if (std::abs(ps.sum() - 1.0) > 1e-9)
                continue; // rank-deficient KKT missed the constraint
            double res = (s.As * ps - b).squaredNorm();
            if (res < best_res - 1e-15) {
                best_res = res;
                best.setZero();
                for (int j = 0; j < m; ++j)
                    best(s.cols[size_t(j)]) = std::max(0.0, ps(j));
            }
        }
        double sum = best.sum();
        if (sum > 0.0)
            best /= sum;
        return best;
    }
};

} // namespace

OracleResult oracle_probabilities(const IlluminationMap &gt,
                                  const SeedSet &seeds) {
    if (gt.width() != seeds.width || gt.height() != seeds.height)
        throw ShapeError("oracle_probabilities: raster dimensions differ");
    const int n = seeds.n_illuminants();
    SimplexSolver solver(seeds);

    OracleResult out;
    out.degenerate = solver.degenerate;
    out.probabilities = ProbabilityMap(gt.width(), gt.height(), n);
    out.residual.assign(gt.pixel_count(), 0.0f);

    for (int y = 0; y < gt.height(); ++y) {
        for (int x = 0; x < gt.width(); ++x) {
            auto px = gt.pixel(x, y);
            Eigen::Vector3d b(px[0], px[1], px[2]);
            Eigen::VectorXd p = solver.nnls(b);
            double sum = p.sum();
            if (std::abs(sum - 1.0) <= 1e-6 && sum > 0.0)
                p /= sum;
            else
                p = solver.simplex(b);
            double res = (solver.A * p - b).norm();
            size_t base = (size_t(y) * gt.width() + x) * size_t(n);
            for (int i = 0; i < n; ++i)
                out.probabilities.data[base + size_t(i)] =
                    float(std::clamp(p(i), 0.0, 1.0));
            out.residual[size_t(y) * gt.width() + x] = float(res);
        }
    }

    // Exact simplex rows: fix float rounding so the invariant holds.
    repair_simplex(out.probabilities, 1e-3);
    return out;
}

ProbabilityMap seed_diffusion_estimate(const LinearImage &biased,
                                       const SeedSet &seeds,
                                       const DiffusionConfig &cfg) {
    if (biased.width() != seeds.width || biased.height() != seeds.height)
        throw ShapeError("seed_diffusion_estimate: raster dimensions differ");
    if (seeds.groups.empty())
        throw ValueRangeError("seed_diffusion_estimate: no seeds");
    const int n = seeds.n_illuminants();
    const int w = biased.width();
    const int h = biased.height();

    auto chroma_of = [&](int x, int y) {
        auto p = biased.pixel(x, y);
        double s = p[0] + p[1] + p[2];
        if (s <= 0.0)
            return std::array<double, 2>{1.0 / 3.0, 1.0 / 3.0};
        return std::array<double, 2>{p[0] / s, p[1] / s};
    };

    struct SeedRef {
        double x, y, cr, cg;
    };
    std::vector<std::vector<SeedRef>> per_illum(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
        for (const auto &pt : seeds.groups[size_t(i)].points) {
            auto c = chroma_of(pt.x, pt.y);
            per_illum[size_t(i)].push_back(
                {double(pt.x), double(pt.y), c[0], c[1]});
        }

    const double diag = std::sqrt(double(w) * w + double(h) * h);
    const double inv2sc = 1.0 / (2.0 * cfg.sigma_chroma * cfg.sigma_chroma);
    const double ss = cfg.sigma_spatial_frac * diag;
    const double inv2ss = 1.0 / (2.0 * ss * ss);

    ProbabilityMap out(w, h, n);
    std::vector<double> logw(static_cast<size_t>(n));
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            auto c = chroma_of(x, y);
            double best_all = -std::numeric_limits<double>::max();
            for (int i = 0; i < n; ++i) {
                double best = -std::numeric_limits<double>::max();
                for (const auto &s : per_illum[size_t(i)]) {
                    double dc = (c[0] - s.cr) * (c[0] - s.cr) +
                                (c[1] - s.cg) * (c[1] - s.cg);
                    double ds = (x - s.x) * (x - s.x) + (y - s.y) * (y - s.y);
                    best = std::max(best, -dc * inv2sc - ds * inv2ss);
                }
                logw[size_t(i)] = best;
                best_all = std::max(best_all, best);
            }
            double total = 0.0;
            for (int i = 0; i < n; ++i) {
                logw[size_t(i)] = std::exp(logw[size_t(i)] - best_all);
                total += logw[size_t(i)];
            }
            size_t base = (size_t(y) * w + x) * size_t(n);
            for (int i = 0; i < n; ++i)
                out.data[base + size_t(i)] = float(logw[size_t(i)] / total);
        }
    }
    repair_simplex(out, 1e-3);
    return out;
}

} // namespace micc
