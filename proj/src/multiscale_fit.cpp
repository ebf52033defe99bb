#include "vpgd/multiscale_fit.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include "vpgd/errors.hpp"

namespace vpgd {

namespace {

/// Dense SPSD solve; coefficients no sample touches are pinned to zero.
Vector solve_normal(Eigen::MatrixXd& a, Eigen::VectorXd& b) {
    const Eigen::Index n = a.rows();
    const double scale = a.diagonal().cwiseAbs().maxCoeff();
    if (!(scale > 0.0) || !std::isfinite(scale)) {
        throw SingularSystem("normal equations are identically zero");
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        if (a(i, i) <= 1e-14 * scale) {
            a.row(i).setZero();
            a.col(i).setZero();
            a(i, i) = scale;
            b(i) = 0.0;
        }
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
    Eigen::VectorXd x;
    bool ok = ldlt.info() == Eigen::Success;
    if (ok) {
        x = ldlt.solve(b);
        ok = x.allFinite() && (a * x - b).norm() <= 1e-9 * b.norm();
    }
    if (!ok) {
        // a null space remains when the fixed factor hides directions (constant macro
        // coefficients make every linear micro function invisible): take the minimum-norm solution
        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a);
        cod.setThreshold(1e-13);
        x = cod.solve(b);
    }
    if (!x.allFinite()) {
        throw SingularSystem("normal equations produced non-finite coefficients");
    }
    return Vector(x.data(), x.data() + n);
}

/// Same contract as solve_normal for a sparse assembly; falls back to the dense path when the
/// sparse factorization fails or leaves a residual (singular systems).
Vector solve_normal_sparse(std::vector<Eigen::Triplet<double>>& entries, Eigen::VectorXd& b) {
    const Eigen::Index n = b.size();
    Eigen::SparseMatrix<double> a(n, n);
    a.setFromTriplets(entries.begin(), entries.end());
    const Eigen::VectorXd diag = a.diagonal();
    const double scale = diag.cwiseAbs().maxCoeff();
    if (!(scale > 0.0) || !std::isfinite(scale)) {
        throw SingularSystem("normal equations are identically zero");
    }
    std::vector<bool> pinned(static_cast<std::size_t>(n), false);
    bool any_pinned = false;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (diag(i) <= 1e-14 * scale) {
            pinned[static_cast<std::size_t>(i)] = true;
            any_pinned = true;
        }
    }
    if (any_pinned) {
        a.prune([&](Eigen::Index r, Eigen::Index col, double) {
            return !pinned[static_cast<std::size_t>(r)] && !pinned[static_cast<std::size_t>(col)];
        });
        for (Eigen::Index i = 0; i < n; ++i) {
            if (pinned[static_cast<std::size_t>(i)]) {
                a.coeffRef(i, i) = scale;
                b(i) = 0.0;
            }
        }
    }
    const double tol = 1e-9 * b.norm();
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(a);
    if (ldlt.info() == Eigen::Success) {
        const Eigen::VectorXd x = ldlt.solve(b);
        if (x.allFinite() && (a * x - b).norm() <= tol) {
            return Vector(x.data(), x.data() + n);
        }
    }
    // singular but consistent (normal equations): iterated Tikhonov from zero converges to the
    // minimum-norm solution and never enters the null space
    ldlt.setShift(1e-10 * scale);
    ldlt.factorize(a);
    if (ldlt.info() == Eigen::Success) {
        Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
        for (int it = 0; it < 50; ++it) {
            const Eigen::VectorXd r = b - a * x;
            if (r.norm() <= tol) {
                break;
            }
            x += ldlt.solve(r);
        }
        if (x.allFinite() && (a * x - b).norm() <= tol) {
            return Vector(x.data(), x.data() + n);
        }
    }
    Eigen::MatrixXd dense(a);
    return solve_normal(dense, b);
}

SymTridiagonal diagonal_metric(std::span<const double> w) {
    SymTridiagonal m(w.size());
    std::copy(w.begin(), w.end(), m.diag.begin());
    return m;
}

}  // namespace

void FitSettings::validate() const {
    if (max_submodes == 0 || als_max_iters == 0) {
        throw InvalidParameter("fit settings: counts must be positive");
    }
    if (!(target_rel_error > 0.0 && target_rel_error < 100.0)) {
        throw InvalidParameter("fit settings: target_rel_error must lie in (0, 100)");
    }
    if (!(als_stagnation_tol > 0.0)) {
        throw InvalidParameter("fit settings: als_stagnation_tol must be positive");
    }
}

MultiScaleFitter::MultiScaleFitter(const SingleScaleGrid& grid, const MultiScaleBasis& basis,
                                   SymTridiagonal metric, const FitSettings& settings)
    : grid_(grid), basis_(basis), metric_(std::move(metric)), settings_(settings) {
    settings_.validate();
    if (std::abs(grid.horizon() - basis.horizon()) > 1e-12 * basis.horizon()) {
        throw DomainError("fit grid and multi-scale basis have different horizons");
    }
    if (metric_.size() != grid.size()) {
        throw ShapeError("fit metric size does not match the grid");
    }
    // keep at least one macro element for the expansion
    const std::size_t max_elems = basis.n_macro() >= 2 ? basis.n_macro() - 2 : 0;
    const std::size_t elems = std::min(settings_.transient_macro_elements, max_elems);
    transient_end_ = static_cast<double>(elems) * basis.macro_step();
    if (elems > 0) {
        const auto idx = grid.index_of(transient_end_);
        if (!idx) {
            throw InvalidParameter("transient end time must coincide with a grid node");
        }
        start_ = *idx;
    }
    stencils_.reserve(grid.size() - start_);
    for (std::size_t n = start_; n < grid.size(); ++n) {
        stencils_.push_back(basis.stencil(grid.node(n)));
    }
}

double MultiScaleFitter::metric_entry(std::size_t n, std::size_t m) const {
    if (n == m) {
        return metric_.diag[n];
    }
    return metric_.off[std::min(n, m)];
}

Vector MultiScaleFitter::block_apply(std::span<const double> r) const {
    const std::size_t n_t = grid_.size();
    Vector out(n_t, 0.0);
    for (std::size_t n = start_; n < n_t; ++n) {
        double v = metric_.diag[n] * r[n];
        if (n > start_) {
            v += metric_.off[n - 1] * r[n - 1];
        }
        if (n + 1 < n_t) {
            v += metric_.off[n] * r[n + 1];
        }
        out[n] = v;
    }
    return out;
}

double MultiScaleFitter::block_norm(std::span<const double> r) const {
    const Vector wr = block_apply(r);
    return std::sqrt(std::max(0.0, dot(r, wr)));
}

double MultiScaleFitter::full_norm(std::span<const double> r) const {
    return std::sqrt(std::max(0.0, metric_.quadratic(r, r)));
}

Vector MultiScaleFitter::sample_submode(std::span<const double> macro,
                                        std::span<const double> micro) const {
    Vector out(grid_.size(), 0.0);
    for (std::size_t n = start_; n < grid_.size(); ++n) {
        double v = 0.0;
        for (const auto& term : stencils_[n - start_].terms) {
            const double g = (1.0 - term.micro_weight) * micro[term.micro] +
                             term.micro_weight * micro[term.micro + 1];
            v += term.value * macro[term.hat] * g;
        }
        out[n] = v;
    }
    return out;
}

Vector MultiScaleFitter::solve_macro(std::span<const double> micro,
                                     std::span<const double> target) const {
    const std::size_t n_t = grid_.size();
    const auto nm = static_cast<Eigen::Index>(basis_.n_macro());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(nm, nm);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(nm);

    // row n of the design matrix: coefficient of q_i is N_i(t_n) G(t_n - t_i)^T g
    auto row = [&](std::size_t n, std::size_t k) {
        const auto& term = stencils_[n - start_].terms[k];
        const double g = (1.0 - term.micro_weight) * micro[term.micro] +
                         term.micro_weight * micro[term.micro + 1];
        return term.value * g;
    };
    const Vector wt = block_apply(target);
    for (std::size_t n = start_; n < n_t; ++n) {
        const auto& terms = stencils_[n - start_].terms;
        for (std::size_t k = 0; k < 2; ++k) {
            const double c = row(n, k);
            if (c == 0.0) {
                continue;
            }
            const auto i = static_cast<Eigen::Index>(terms[k].hat);
            b(i) += c * wt[n];
            for (std::size_t m = (n > start_ ? n - 1 : n); m <= std::min(n + 1, n_t - 1); ++m) {
                const double w = metric_entry(n, m);
                if (w == 0.0) {
                    continue;
                }
                const auto& other = stencils_[m - start_].terms;
                for (std::size_t l = 0; l < 2; ++l) {
                    const double d = row(m, l);
                    if (d != 0.0) {
                        a(i, static_cast<Eigen::Index>(other[l].hat)) += w * c * d;
                    }
                }
            }
        }
    }
    return solve_normal(a, b);
}

Vector MultiScaleFitter::solve_micro(std::span<const double> macro,
                                     std::span<const double> target) const {
    const std::size_t n_t = grid_.size();
    const auto ng = static_cast<Eigen::Index>(basis_.n_micro());
    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(48 * (n_t - start_));
    Eigen::VectorXd b = Eigen::VectorXd::Zero(ng);

    // row n: coefficient of g_m is sum_i N_i(t_n) q_i G_m(t_n - t_i); at most four entries
    struct Sparse {
        std::array<std::size_t, 4> idx{};
        std::array<double, 4> val{};
        std::size_t count = 0;
    };
    std::vector<Sparse> rows(n_t - start_);
    for (std::size_t n = start_; n < n_t; ++n) {
        Sparse& s = rows[n - start_];
        for (const auto& term : stencils_[n - start_].terms) {
            const double c = term.value * macro[term.hat];
            if (c == 0.0) {
                continue;
            }
            if (term.micro_weight != 1.0) {
                s.idx[s.count] = term.micro;
                s.val[s.count++] = c * (1.0 - term.micro_weight);
            }
            if (term.micro_weight != 0.0) {
                s.idx[s.count] = term.micro + 1;
                s.val[s.count++] = c * term.micro_weight;
            }
        }
    }
    const Vector wt = block_apply(target);
    for (std::size_t n = start_; n < n_t; ++n) {
        const Sparse& s = rows[n - start_];
        for (std::size_t p = 0; p < s.count; ++p) {
            b(static_cast<Eigen::Index>(s.idx[p])) += s.val[p] * wt[n];
        }
        for (std::size_t m = (n > start_ ? n - 1 : n); m <= std::min(n + 1, n_t - 1); ++m) {
            const double w = metric_entry(n, m);
            if (w == 0.0) {
                continue;
            }
            const Sparse& o = rows[m - start_];
            for (std::size_t p = 0; p < s.count; ++p) {
                for (std::size_t r = 0; r < o.count; ++r) {
                    entries.emplace_back(static_cast<Eigen::Index>(s.idx[p]),
                                         static_cast<Eigen::Index>(o.idx[r]), w * s.val[p] * o.val[r]);
                }
            }
        }
    }
    return solve_normal_sparse(entries, b);
}

Vector MultiScaleFitter::initial_micro(std::span<const double> residual, std::size_t rank) const {
    const std::size_t n_t = grid_.size();
    const std::size_t nm = basis_.n_macro();
    Vector energy(nm, 0.0);
    for (std::size_t n = start_; n < n_t; ++n) {
        for (const auto& term : stencils_[n - start_].terms) {
            if (term.value > 0.0) {
                energy[term.hat] += residual[n] * residual[n];
            }
        }
    }
    std::vector<std::size_t> order(nm);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return energy[a] > energy[b]; });

    Vector g(basis_.n_micro(), 1.0);
    if (rank < nm && energy[order[rank]] > 0.0) {
        const double centre = basis_.macro_node(order[rank]);
        const double dt = grid_.step();
        for (std::size_t m = 0; m < g.size(); ++m) {
            const double t = centre + basis_.micro_node(m);
            if (t < transient_end_ || t > grid_.horizon()) {
                g[m] = 0.0;
                continue;
            }
            const double s = t / dt;
            const auto k = std::min(static_cast<std::size_t>(std::floor(s)), n_t - 2);
            const double w = std::clamp(s - static_cast<double>(k), 0.0, 1.0);
            g[m] = (1.0 - w) * residual[k] + w * residual[k + 1];
        }
    }
    double nrm = norm2(g);
    if (!(nrm > 0.0)) {
        std::fill(g.begin(), g.end(), 1.0);
        nrm = norm2(g);
    }
    for (double& v : g) {
        v /= nrm;
    }
    return g;
}

std::size_t MultiScaleFitter::refine(Vector& macro, Vector& micro, std::span<const double> target,
                                     std::size_t max_iters) const {
    const std::size_t n_t = grid_.size();
    const std::size_t nm = basis_.n_macro();
    const std::size_t ng = basis_.n_micro();
    const auto n_all = static_cast<Eigen::Index>(nm + ng);

    auto residual_of = [&](const Vector& q, const Vector& g) {
        Vector r(target.begin(), target.end());
        axpy(-1.0, sample_submode(q, g), r);
        for (std::size_t n = 0; n < start_; ++n) {
            r[n] = 0.0;
        }
        return r;
    };

    // row n of the Jacobian: 2 macro entries and up to 4 micro entries (offset by nm)
    struct Row {
        std::array<std::size_t, 6> idx{};
        std::array<double, 6> val{};
        std::size_t count = 0;
    };
    std::vector<Row> rows(n_t - start_);

    Vector r = residual_of(macro, micro);
    double cost = dot(r, block_apply(r));
    const double floor = 1e-30 * std::max(1.0, dot(target, block_apply(target)));
    double mu = 1e-8;
    std::size_t accepted = 0;
    for (std::size_t it = 0; it < max_iters && cost > floor; ++it) {
        for (std::size_t n = start_; n < n_t; ++n) {
            Row& row = rows[n - start_];
            row.count = 0;
            for (const auto& term : stencils_[n - start_].terms) {
                if (term.value == 0.0) {
                    continue;
                }
                const double gv = (1.0 - term.micro_weight) * micro[term.micro] +
                                  term.micro_weight * micro[term.micro + 1];
                row.idx[row.count] = term.hat;
                row.val[row.count++] = term.value * gv;
                const double c = term.value * macro[term.hat];
                if (term.micro_weight != 1.0) {
                    row.idx[row.count] = nm + term.micro;
                    row.val[row.count++] = c * (1.0 - term.micro_weight);
                }
                if (term.micro_weight != 0.0) {
                    row.idx[row.count] = nm + term.micro + 1;
                    row.val[row.count++] = c * term.micro_weight;
                }
            }
        }
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n_all, n_all);
        Eigen::VectorXd b = Eigen::VectorXd::Zero(n_all);
        const Vector wr = block_apply(r);
        for (std::size_t n = start_; n < n_t; ++n) {
            const Row& s = rows[n - start_];
            for (std::size_t p = 0; p < s.count; ++p) {
                b(static_cast<Eigen::Index>(s.idx[p])) += s.val[p] * wr[n];
            }
            for (std::size_t m = (n > start_ ? n - 1 : n); m <= std::min(n + 1, n_t - 1); ++m) {
                const double w = metric_entry(n, m);
                if (w == 0.0) {
                    continue;
                }
                const Row& o = rows[m - start_];
                for (std::size_t p = 0; p < s.count; ++p) {
                    for (std::size_t k = 0; k < o.count; ++k) {
                        a(static_cast<Eigen::Index>(s.idx[p]), static_cast<Eigen::Index>(o.idx[k])) +=
                            w * s.val[p] * o.val[k];
                    }
                }
            }
        }
        const Eigen::VectorXd d = a.diagonal().cwiseMax(1e-14 * a.diagonal().maxCoeff());
        bool improved = false;
        for (int tries = 0; tries < 8 && !improved; ++tries) {
            Eigen::MatrixXd damped = a;
            damped.diagonal() += mu * d;
            Eigen::LDLT<Eigen::MatrixXd> ldlt(damped);
            const Eigen::VectorXd step = ldlt.solve(b);
            if (ldlt.info() != Eigen::Success || !step.allFinite()) {
                mu *= 10.0;
                continue;
            }
            Vector q = macro;
            Vector g = micro;
            for (std::size_t i = 0; i < nm; ++i) {
                q[i] += step(static_cast<Eigen::Index>(i));
            }
            for (std::size_t m = 0; m < ng; ++m) {
                g[m] += step(static_cast<Eigen::Index>(nm + m));
            }
            Vector rt = residual_of(q, g);
            const double ct = dot(rt, block_apply(rt));
            if (ct < cost) {
                improved = true;
                const double gain = (cost - ct) / cost;
                macro = std::move(q);
                micro = std::move(g);
                r = std::move(rt);
                cost = ct;
                mu = std::max(mu / 10.0, 1e-12);
                ++accepted;
                if (gain < 1e-10) {
                    return accepted;
                }
            } else {
                mu *= 10.0;
            }
        }
        if (!improved) {
            break;
        }
    }
    return accepted;
}

FitResult MultiScaleFitter::fit(std::span<const double> signal) const {
    const std::size_t n_t = grid_.size();
    if (signal.size() != n_t) {
        throw ShapeError("signal length does not match the fit grid");
    }
    if (!all_finite(signal)) {
        throw NumericalFailure("signal contains non-finite samples");
    }

    FitResult out{MultiScaleFunction(basis_), Vector(n_t, 0.0), 0.0, {}, {}};
    const double s_full = full_norm(signal);
    if (!(s_full > 0.0)) {
        return out;
    }
    if (start_ > 0) {
        TransientSegment seg;
        seg.end_time = transient_end_;
        seg.step = grid_.step();
        seg.samples.assign(signal.begin(), signal.begin() + static_cast<std::ptrdiff_t>(start_ + 1));
        out.function.set_transient(std::move(seg));
        std::copy(signal.begin(), signal.begin() + static_cast<std::ptrdiff_t>(start_),
                  out.samples.begin());
    }
    Vector residual(signal.begin(), signal.end());
    for (std::size_t n = 0; n < start_; ++n) {
        residual[n] = 0.0;
    }
    const double s_block = block_norm(signal);
    out.rel_error_percent = 100.0 * full_norm(residual) / s_full;
    if (!(s_block > 0.0) || 100.0 * block_norm(residual) / s_block <= settings_.target_rel_error) {
        return out;
    }

    for (std::size_t k = 0; k < settings_.max_submodes; ++k) {
        Vector q;
        Vector g;
        Vector contrib;
        std::size_t iters = 0;
        bool ok = false;
        for (std::size_t attempt = 0; attempt < 3 && !ok; ++attempt) {
            try {
                g = attempt < 2 ? initial_micro(residual, attempt) : Vector(basis_.n_micro(), 1.0);
                Vector prev(n_t, 0.0);
                for (iters = 1; iters <= settings_.als_max_iters; ++iters) {
                    q = solve_macro(g, residual);
                    g = solve_micro(q, residual);
                    const double gn = norm2(g);
                    if (!(gn > 0.0)) {
                        throw SingularSystem("micro coefficients vanished");
                    }
                    for (double& v : g) {
                        v /= gn;
                    }
                    for (double& v : q) {
                        v *= gn;
                    }
                    contrib = sample_submode(q, g);
                    Vector diff = contrib;
                    axpy(-1.0, prev, diff);
                    const double cn = block_norm(contrib);
                    const double change = cn > 0.0 ? block_norm(diff) / cn : 0.0;
                    prev = contrib;
                    if (change < settings_.als_stagnation_tol) {
                        break;
                    }
                }
                iters = std::min(iters, settings_.als_max_iters);
                if (settings_.joint_refine_iters > 0) {
                    // a jointly optimal submode is a worse greedy step in general; keep it only
                    // when it finishes the fit
                    Vector qr = q;
                    Vector gr = g;
                    refine(qr, gr, residual, settings_.joint_refine_iters);
                    const Vector cr = sample_submode(qr, gr);
                    Vector rest = residual;
                    axpy(-1.0, cr, rest);
                    const double gn = norm2(gr);
                    if (gn > 0.0 &&
                        100.0 * block_norm(rest) / s_block <= settings_.target_rel_error) {
                        for (double& v : gr) {
                            v /= gn;
                        }
                        for (double& v : qr) {
                            v *= gn;
                        }
                        q = std::move(qr);
                        g = std::move(gr);
                        contrib = sample_submode(q, g);
                    }
                }
                ok = true;
            } catch (const SingularSystem&) {
                ok = false;
            }
        }
        if (!ok) {
            throw NumericalFailure("multi-scale fit: alternating solve failed after 3 initializations");
        }
        if (block_norm(contrib) < 1e-12 * s_full) {
            break;
        }
        axpy(-1.0, contrib, residual);
        axpy(1.0, contrib, out.samples);
        out.function.add_submode(std::move(q), std::move(g));
        out.rel_error_percent = 100.0 * full_norm(residual) / s_full;
        out.history.push_back(out.rel_error_percent);
        out.als_iterations.push_back(iters);
        if (100.0 * block_norm(residual) / s_block <= settings_.target_rel_error) {
            break;
        }
    }
    return out;
}

FitResult fit_metric(std::span<const double> signal, const SymTridiagonal& metric,
                     const SingleScaleGrid& grid, const MultiScaleBasis& basis,
                     const FitSettings& settings) {
    return MultiScaleFitter(grid, basis, metric, settings).fit(signal);
}

FitResult fit_weighted(std::span<const double> signal, std::span<const double> weights,
                       const SingleScaleGrid& grid, const MultiScaleBasis& basis,
                       const FitSettings& settings) {
    if (weights.size() != grid.size()) {
        throw ShapeError("weights length does not match the fit grid");
    }
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) {
            throw InvalidParameter("fit weights must be finite and non-negative");
        }
        total += w;
    }
    if (!(total > 0.0)) {
        throw InvalidParameter("fit weights must not all vanish");
    }
    return fit_metric(signal, diagonal_metric(weights), grid, basis, settings);
}

FitResult fit_signal(std::span<const double> signal, const SingleScaleGrid& grid,
                     const MultiScaleBasis& basis, const FitSettings& settings) {
    const Vector ones(grid.size(), 1.0);
    return fit_metric(signal, diagonal_metric(ones), grid, basis, settings);
}

const std::vector<double>& residual_history(const FitResult& result) { return result.history; }

}  // namespace vpgd
