#include "pngkpz/asymptotic.hpp"

#include <tbb/parallel_for.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>

namespace pngkpz {

namespace {

constexpr double kPi = 3.14159265358979323846;

// One integration variable of a basic kernel: a vertical line carrying G(w|P) for a
// z variable or 1/G(w|P) for a zeta variable.
struct ChainNode {
    bool is_z;
    double abscissa;
    TXXi P;
};

// Nodes in integration order; couple[j] is true for (w_j - w_{j+1})^{-1} and false for
// (w_{j+1} - w_j)^{-1}. The first node carries e^{-w u}, the last e^{w v}.
struct Chain {
    std::vector<ChainNode> nodes;
    std::vector<bool> couple;
    bool active = false;
};

TXXi dP(const LimitInstance& in, int k1, int k2) {
    const TXXi P = delta_txxi(k1, k2, in.t, in.x, in.xi);
    if (!(P.t > 0.0)) throw domain_error("basic kernel: time increment must be positive");
    return P;
}

void require(bool ok, const char* what) {
    if (!ok) throw domain_error(what);
}

void push(Chain& c, ChainNode n, bool first_minus_second) {
    if (!c.nodes.empty()) c.couple.push_back(first_minus_second);
    c.nodes.push_back(n);
}

// z chain for k in (k1, k2] on the lines D_k, coupled as (z_k - z_{k+1}).
void push_z_chain(Chain& c, const KernelIndex& idx, const LimitInstance& in, bool from_zeta) {
    const int p = in.p();
    const DAssignment da = d_for_eps(idx.eps, idx.k1, idx.k2, p, in.D_lo, in.D_hi);
    for (int k = idx.k1 + 1; k <= idx.k2; ++k) {
        const bool fms = !(k == idx.k1 + 1 && from_zeta);  // (z_{k1+1} - zeta_1) reverses the order
        push(c, {true, da.D[k], dP(in, k - 1, k)}, fms);
    }
}

Chain build_chain(const KernelIndex& idx, int r, int s, const LimitInstance& in) {
    const int p = in.p();
    const int rs = rstar(r, p), ss = rstar(s, p);
    Chain c;
    switch (idx.family) {
        case 1:
            if (r != p) return c;
            push(c, {true, in.D, dP(in, p - 1, p)}, true);
            push(c, {false, -in.d1, dP(in, ss, p)}, true);
            break;
        case 2:
            if (!(s < idx.k && idx.k < rs)) return c;
            require(in.d1 < in.d2, "family 2 needs d1 < d2");
            push(c, {false, -in.d1, dP(in, idx.k, rs)}, true);
            push(c, {false, -in.d2, dP(in, s, idx.k)}, true);
            break;
        case 3:
            if (!(r == p && s < idx.k && idx.k < p)) return c;
            require(in.d3 < in.d2, "family 3 needs d3 < d2");
            push(c, {true, in.D, dP(in, p - 1, p)}, true);
            push(c, {false, -in.d2, dP(in, idx.k, p)}, true);
            push(c, {false, -in.d3, dP(in, s, idx.k)}, true);
            break;
        case 4:
            if (!(idx.k1 < rs && s < idx.k2 && idx.k2 < idx.k1)) return c;
            require(in.d1 < in.d2 && in.d3 < in.d2, "family 4 needs d1, d3 < d2");
            push(c, {false, -in.d1, dP(in, idx.k1, rs)}, true);
            push(c, {false, -in.d2, dP(in, idx.k2, idx.k1)}, true);
            push(c, {false, -in.d3, dP(in, s, idx.k2)}, true);
            break;
        case 5:
            if (!(idx.k1 < rs && s == idx.k2 && idx.k2 < p && idx.k1 < idx.k2)) return c;
            push(c, {false, -in.d1, dP(in, idx.k1, rs)}, true);
            push_z_chain(c, idx, in, true);
            break;
        case 6:
            if (!(idx.k1 < rs && ss < idx.k2 && idx.k1 < idx.k2)) return c;
            push(c, {false, -in.d1, dP(in, idx.k1, rs)}, true);
            push_z_chain(c, idx, in, true);
            push(c, {false, -in.d2, dP(in, ss, idx.k2)}, true);
            break;
        case 7:
            if (!(idx.k1 < rs && s < idx.k3 && idx.k3 < idx.k2 && idx.k1 < idx.k2)) return c;
            require(in.d1 < in.d2 && in.d3 < in.d2, "family 7 needs d1, d3 < d2");
            push(c, {false, -in.d1, dP(in, idx.k1, rs)}, true);
            push_z_chain(c, idx, in, true);
            push(c, {false, -in.d2, dP(in, idx.k3, idx.k2)}, true);
            push(c, {false, -in.d3, dP(in, s, idx.k3)}, true);
            break;
        default:
            throw domain_error("basic kernel family must be in 1..7");
    }
    c.active = true;
    return c;
}

// Quadratic decay rate along the line: Re log of the integrand ~ -curv y^2.
double line_curvature(const ChainNode& n) {
    const double t = n.P.t, x = n.P.x, a = std::fabs(n.abscissa);
    return n.is_z ? t * a + std::pow(t, 2.0 / 3.0) * x : t * a - std::pow(t, 2.0 / 3.0) * x;
}

struct Line {
    std::vector<cplx> z;
    Eigen::VectorXcd f;  // weight times G or 1/G
};

Line make_line(const ChainNode& n, const LineSettings& ls) {
    const double curv = line_curvature(n);
    if (!(curv > 0.0)) throw domain_error("basic kernel: integrand does not decay on its line");
    const double Y = line_halfwidth(curv, ls.budget);
    const double t = n.P.t, a = std::fabs(n.abscissa);
    const double omega = t * (Y * Y + a * a) + 2.0 * std::pow(t, 2.0 / 3.0) * std::fabs(n.P.x) * (a + Y) +
                         std::cbrt(t) * std::fabs(n.P.xi) + ls.u_max + 4.0;
    const int panels = std::max(2, static_cast<int>(std::ceil(2.0 * Y * omega / ls.omega_h)));
    const Contour c = Contour::vline(n.abscissa, Y, panels, ls.nodes_per_panel);
    Line L;
    L.z = c.z;
    L.f.resize(c.size());
    const double sg = n.is_z ? 1.0 : -1.0;
    for (int k = 0; k < c.size(); ++k) L.f(k) = c.w[k] * std::exp(sg * log_script_g(c.z[k], n.P.t, n.P.x, n.P.xi));
    return L;
}

std::string chain_key(const Chain& c) {
    std::string s;
    char buf[128];
    for (size_t j = 0; j < c.nodes.size(); ++j) {
        const auto& n = c.nodes[j];
        std::snprintf(buf, sizeof buf, "%c%.17g,%.17g,%.17g,%.17g%c", n.is_z ? 'z' : 'y', n.abscissa, n.P.t, n.P.x,
                      n.P.xi, j < c.couple.size() ? (c.couple[j] ? '+' : '-') : '.');
        s += buf;
    }
    return s;
}

Eigen::MatrixXcd chain_matrix(const Chain& c, const std::vector<double>& u, const std::vector<double>& v,
                              const LineSettings& ls) {
    std::vector<Line> lines;
    for (const auto& n : c.nodes) lines.push_back(make_line(n, ls));
    const Line& l0 = lines.front();
    Eigen::MatrixXcd acc(u.size(), l0.z.size());
    for (size_t i = 0; i < u.size(); ++i)
        for (size_t a = 0; a < l0.z.size(); ++a) acc(i, a) = l0.f(a) * std::exp(-l0.z[a] * u[i]);
    for (size_t j = 1; j < lines.size(); ++j) {
        const Line& A = lines[j - 1];
        const Line& B = lines[j];
        Eigen::MatrixXcd C(A.z.size(), B.z.size());
        const double sg = c.couple[j - 1] ? 1.0 : -1.0;
        for (size_t a = 0; a < A.z.size(); ++a)
            for (size_t b = 0; b < B.z.size(); ++b) C(a, b) = sg / (A.z[a] - B.z[b]);
        acc = (acc * C) * B.f.asDiagonal();
    }
    const Line& le = lines.back();
    Eigen::MatrixXcd E(le.z.size(), v.size());
    for (size_t b = 0; b < le.z.size(); ++b)
        for (size_t j = 0; j < v.size(); ++j) E(b, j) = std::exp(le.z[b] * v[j]);
    return acc * E;
}

}  // namespace

void LimitInstance::validate() const {
    const int p = this->p();
    if (p < 1) throw domain_error("limit instance needs p >= 1");
    if (static_cast<int>(x.size()) != p || static_cast<int>(xi.size()) != p)
        throw domain_error("t, x, xi must have equal length");
    for (int k = 0; k < p; ++k)
        if (!(t[k] > (k ? t[k - 1] : 0.0))) throw domain_error("t must be positive and strictly increasing");
    if (!(d1 > 0.0 && d2 > 0.0 && d3 > 0.0 && D > 0.0)) throw domain_error("contour abscissas must be positive");
    if (!(d1 < d2 && d3 < d2)) throw domain_error("need d1, d3 < d2");
    if (!(0.0 < D_lo && D_lo < D_hi)) throw domain_error("need 0 < D_lo < D_hi");
}

LimitInstance LimitInstance::with_decaying_lines() const {
    validate();
    // z lines need D > -x t^{-1/3}, zeta lines need d > x t^{-1/3}, over all increments
    double need_z = 0.0, need_zeta = 0.0;
    for (int k1 = 0; k1 < p(); ++k1)
        for (int k2 = k1 + 1; k2 <= p(); ++k2) {
            const TXXi P = delta_txxi(k1, k2, t, x, xi);
            const double c = P.x / std::cbrt(P.t);
            need_z = std::max(need_z, -c);
            need_zeta = std::max(need_zeta, c);
        }
    constexpr double margin = 0.5;
    LimitInstance out = *this;
    if (out.D_lo < need_z + margin) {
        const double sh = need_z + margin - out.D_lo;
        out.D_lo += sh;
        out.D_hi += sh;
    }
    out.D = std::max(out.D, need_z + margin);
    const double dmin = need_zeta + margin;
    if (out.d1 < dmin || out.d3 < dmin) {
        const double gap = d2 - std::max(d1, d3);
        out.d1 = std::max(out.d1, dmin);
        out.d3 = std::max(out.d3, dmin);
        out.d2 = std::max(out.d1, out.d3) + gap;
    }
    return out;
}

LimitInstance LimitInstance::from_kpz(const KPZParams& kpz) {
    LimitInstance in;
    in.t = kpz.t;
    in.x = kpz.x;
    in.xi = kpz.xi;
    in.mu = kpz.mu != 0.0 ? kpz.mu : default_mu(kpz.t, kpz.x);
    return in.with_decaying_lines();
}

void DAssignment::validate(const EpsilonVector& eps) const {
    for (int k = k1 + 1; k <= k2; ++k)
        if (!(D[k] > 0.0)) throw domain_error("D_k must be positive");
    for (int k = k1 + 1; k < k2; ++k) {
        const bool up = eps[k - 1] == 1;
        if (up ? !(D[k] < D[k + 1]) : !(D[k] > D[k + 1])) throw domain_error("D ordering does not match epsilon");
    }
    for (int a = k1 + 1; a <= k2; ++a)
        for (int b = a + 1; b <= k2; ++b)
            if (D[a] == D[b]) throw domain_error("D_k must be distinct");
}

DAssignment d_for_eps(const EpsilonVector& eps, int k1, int k2, int p, double lo, double hi) {
    if (!(0 <= k1 && k1 < k2 && k2 <= p)) throw domain_error("d_for_eps: need 0 <= k1 < k2 <= p");
    if (static_cast<int>(eps.size()) != std::max(p - 1, 0)) throw domain_error("d_for_eps: eps length");
    std::vector<double> raw(p + 1, 0.0);
    raw[1] = std::ldexp(1.0, p);
    for (int k = 1; k < p; ++k) raw[k + 1] = raw[k] + (eps[k - 1] == 1 ? 1.0 : -1.0) * std::ldexp(1.0, k);
    double mn = 1e300, mx = -1e300;
    for (int k = k1 + 1; k <= k2; ++k) {
        mn = std::min(mn, raw[k]);
        mx = std::max(mx, raw[k]);
    }
    DAssignment da;
    da.k1 = k1;
    da.k2 = k2;
    da.D.assign(p + 1, 0.0);
    for (int k = k1 + 1; k <= k2; ++k)
        da.D[k] = mx > mn ? lo + (hi - lo) * (raw[k] - mn) / (mx - mn) : 0.5 * (lo + hi);
    da.validate(eps);
    return da;
}

Eigen::MatrixXcd basic_kernel_matrix(const KernelIndex& idx, int r, const std::vector<double>& u, int s,
                                     const std::vector<double>& v, const LimitInstance& inst,
                                     const LineSettings& ls) {
    const int p = inst.p();
    if (r < 1 || r > p || s < 1 || s > p) throw domain_error("block index out of range");
    const Chain c = build_chain(idx, r, s, inst);
    if (!c.active) return Eigen::MatrixXcd::Zero(u.size(), v.size());
    Eigen::MatrixXcd M = chain_matrix(c, u, v, ls);
    for (size_t i = 0; i < u.size(); ++i)
        for (size_t j = 0; j < v.size(); ++j) M(i, j) *= std::exp(inst.mu * (v[j] - u[i]));
    return M;
}

cplx eval_basic_kernel(const KernelIndex& idx, int r, double u, int s, double v, const LimitInstance& inst,
                       const LineSettings& ls) {
    return basic_kernel_matrix(idx, r, {u}, s, {v}, inst, ls)(0, 0);
}

double airy_form_kernel(const KernelIndex& idx, int r, double u, int s, double v, const LimitInstance& inst,
                        const AiryFormSettings& as) {
    const Chain c = build_chain(idx, r, s, inst);
    if (!c.active) return 0.0;
    // Each Cauchy factor becomes sign * int_0^inf e^{-sign lambda (w_a - w_b)} d lambda
    // with sign = sgn Re(w_a - w_b); every line integral is then an A[.] kernel.
    const int J = static_cast<int>(c.nodes.size());
    std::vector<double> sign(J - 1);
    double total_sign = 1.0;
    for (int j = 0; j + 1 < J; ++j) {
        const double ra = c.couple[j] ? c.nodes[j].abscissa : c.nodes[j + 1].abscissa;
        const double rb = c.couple[j] ? c.nodes[j + 1].abscissa : c.nodes[j].abscissa;
        sign[j] = ra > rb ? 1.0 : -1.0;
        total_sign *= sign[j];
    }
    // Coefficient of lambda_j in alpha of node j (left) and node j+1 (right).
    auto left_coef = [&](int j) { return c.couple[j] ? -sign[j] : sign[j]; };
    auto right_coef = [&](int j) { return -left_coef(j); };
    auto node_value = [&](int j, double alpha) {
        const ChainNode& n = c.nodes[j];
        // z: A[P] with v' - u' = -alpha; zeta: A[t, -x, xi] with v' - u' = alpha.
        return n.is_z ? airy_op(n.P.t, n.P.x, n.P.xi, 0.0, -alpha) : airy_op(n.P.t, -n.P.x, n.P.xi, 0.0, alpha);
    };
    const GLRule& gl = gauss_legendre(as.nodes_per_panel);
    std::vector<double> lam, wl;
    const double h = as.lambda_max / as.panels;
    for (int pnl = 0; pnl < as.panels; ++pnl)
        for (size_t k = 0; k < gl.x.size(); ++k) {
            lam.push_back((pnl + 0.5) * h + 0.5 * h * gl.x[k]);
            wl.push_back(0.5 * h * gl.w[k]);
        }
    const int n = static_cast<int>(lam.size());
    double val;
    if (J == 1) {
        val = node_value(0, -u + v);
    } else {
        Eigen::VectorXd vec(n);
        for (int a = 0; a < n; ++a) vec(a) = node_value(0, -u + left_coef(0) * lam[a]) * wl[a];
        for (int j = 1; j + 1 < J; ++j) {
            Eigen::MatrixXd A(n, n);
            tbb::parallel_for(0, n, [&](int a) {
                for (int b = 0; b < n; ++b)
                    A(a, b) = node_value(j, right_coef(j - 1) * lam[a] + left_coef(j) * lam[b]) * wl[b];
            });
            vec = A.transpose() * vec;
        }
        val = 0.0;
        for (int a = 0; a < n; ++a) val += vec(a) * node_value(J - 1, right_coef(J - 2) * lam[a] + v);
    }
    return total_sign * val * std::exp(inst.mu * (v - u));
}

std::vector<double> chi_project(int eps, const std::vector<double>& x, const std::vector<double>& f) {
    if (x.size() != f.size()) throw domain_error("chi_project: size mismatch");
    std::vector<double> out(f.size());
    for (size_t i = 0; i < f.size(); ++i) out[i] = chi(eps % 2 ? 1 : 2, x[i]) ? f[i] : 0.0;
    return out;
}

namespace {

// One basic kernel with the theta-dependent weight it carries in F.
struct FTerm {
    KernelIndex idx;
    std::function<cplx(const ThetaTools&, int r, int s)> coef;
};

std::string term_key(const KernelIndex& k) {
    std::string s = std::to_string(k.family) + ":" + std::to_string(k.k) + ":" + std::to_string(k.k1) + ":" +
                    std::to_string(k.k2) + ":" + std::to_string(k.k3) + ":";
    // only the interior epsilon entries move the contours
    if (k.family >= 5)
        for (int j = k.k1 + 1; j < k.k2; ++j) s += std::to_string(k.eps[j - 1]);
    return s;
}

std::vector<FTerm> enumerate_terms(int p) {
    std::vector<FTerm> out;
    auto Th = [](const ThetaTools& tt, int r, int k) { return tt.Theta_diff(r, k); };
    for (int k = 0; k <= p; ++k) {
        KernelIndex ki{2, k, 0, 0, 0, EpsilonVector(p - 1, 1)};
        // -F0 + F1
        out.push_back({ki, [k, Th](const ThetaTools& tt, int r, int s) {
                           return -(1.0 + Th(tt, r, k)) * (1.0 + Th(tt, k, s)) + Th(tt, r, k);
                       }});
    }
    for (int k1 = 0; k1 <= p; ++k1)
        for (int k2 = 0; k2 <= p; ++k2) {
            KernelIndex ki{4, 0, k1, k2, 0, EpsilonVector(p - 1, 1)};
            out.push_back({ki, [k1, k2, Th](const ThetaTools& tt, int r, int s) {
                               return -Th(tt, r, k1) * (1.0 + Th(tt, k2, s));
                           }});
        }
    for (int k1 = 0; k1 < p; ++k1)
        for (int k2 = k1 + 1; k2 <= p; ++k2)
            for (const auto& e : admissible_eps(p, k1, k2)) {
                const double sg = ThetaTools::eps_sign(e, k1, k2, p) * (k2 == p ? -1.0 : 1.0);
                auto th = [e, sg](const ThetaTools& tt, int r) { return sg * tt.theta_r(r, e); };
                // F2
                out.push_back({{5, 0, k1, k2, 0, e}, [th](const ThetaTools& tt, int r, int) { return th(tt, r); }});
                out.push_back({{6, 0, k1, k2, 0, e}, [th](const ThetaTools& tt, int r, int) { return th(tt, r); }});
                if (k1 == p - 1 && k2 == p)
                    out.push_back({{1, 0, k1, k2, 0, e}, [th](const ThetaTools& tt, int r, int) { return th(tt, r); }});
                // -F4
                for (int k3 = 0; k3 <= p; ++k3) {
                    out.push_back({{7, 0, k1, k2, k3, e}, [th, k2, k3, p, Th](const ThetaTools& tt, int r, int s) {
                                       cplx w = 1.0 + Th(tt, k3, s);
                                       if (k2 == p && k3 == p - 1) w -= 1.0 + Th(tt, p, s);
                                       return -th(tt, r) * w;
                                   }});
                    if (k2 < p && k3 == p)
                        out.push_back({{6, 0, k1, k2, 0, e}, [th, k2, Th](const ThetaTools& tt, int r, int s) {
                                           return -th(tt, r) * (1.0 + Th(tt, k2, s));
                                       }});
                    if (k1 == p - 1 && k2 == p)
                        out.push_back({{3, k3, k1, k2, 0, e}, [th, k3, p, Th](const ThetaTools& tt, int r, int s) {
                                           cplx w = 1.0 + Th(tt, k3, s);
                                           if (k3 == p - 1) w -= 1.0 + Th(tt, p, s);
                                           return -th(tt, r) * w;
                                       }});
                }
            }
    return out;
}

// Terms sharing a kernel are merged so each kernel is discretized once.
struct MergedTerm {
    KernelIndex idx;
    std::vector<std::function<cplx(const ThetaTools&, int, int)>> coefs;
};

std::vector<MergedTerm> merged_terms(int p) {
    std::map<std::string, MergedTerm> m;
    std::vector<std::string> order;
    for (auto& t : enumerate_terms(p)) {
        const std::string key = term_key(t.idx);
        auto it = m.find(key);
        if (it == m.end()) {
            order.push_back(key);
            it = m.emplace(key, MergedTerm{t.idx, {}}).first;
        }
        it->second.coefs.push_back(t.coef);
    }
    std::vector<MergedTerm> out;
    for (const auto& k : order) out.push_back(std::move(m[k]));
    return out;
}

}  // namespace

int f2_term_count(int p) {
    int n = 0;
    for (int k1 = 0; k1 < p; ++k1)
        for (int k2 = k1 + 1; k2 <= p; ++k2) n += static_cast<int>(admissible_eps(p, k1, k2).size());
    return n;
}

cplx assemble_F(const std::vector<cplx>& theta, int r, double u, int s, double v, const LimitInstance& inst,
                const LineSettings& ls) {
    inst.validate();
    const int p = inst.p();
    ThetaTools tt(theta, std::vector<long>(p, 0));
    cplx acc = 0.0;
    for (const auto& mt : merged_terms(p)) {
        const cplx k = eval_basic_kernel(mt.idx, r, u, s, v, inst, ls);
        if (k == 0.0) continue;
        cplx c = 0.0;
        for (const auto& f : mt.coefs) c += f(tt, r, s);
        acc += c * k;
    }
    return acc;
}

struct LimitKernel::Impl {
    LimitInstance inst;
    NystromGrid grid;
    int p = 0;
    std::vector<std::vector<int>> idx_of_block;  // grid indices per block
    struct Piece {
        const MergedTerm* term;
        int r, s;
        Eigen::MatrixXcd M;  // W^{1/2} K W^{1/2} restricted to block (r, s)
    };
    std::vector<MergedTerm> terms;
    std::vector<Piece> pieces;
};

LimitKernel::LimitKernel(const LimitInstance& inst, const NystromGrid& grid, const LineSettings& ls)
    : impl_(std::make_unique<Impl>()) {
    inst.validate();
    if (grid.p != inst.p()) throw domain_error("grid block count differs from p");
    auto& im = *impl_;
    im.inst = inst;
    im.grid = grid;
    im.p = inst.p();
    im.idx_of_block.assign(im.p + 1, {});
    for (int i = 0; i < grid.size(); ++i) im.idx_of_block[grid.block[i]].push_back(i);
    im.terms = merged_terms(im.p);
    for (const auto& t : im.terms)
        for (int r = 1; r <= im.p; ++r)
            for (int s = 1; s <= im.p; ++s)
                if (build_chain(t.idx, r, s, inst).active) im.pieces.push_back({&t, r, s, {}});
    LineSettings l2 = ls;
    l2.u_max = std::max(ls.u_max, grid.L);
    // Blocks below p share one grid, so equal chains give equal matrices.
    std::map<std::string, size_t> first;
    std::vector<size_t> source(im.pieces.size());
    for (size_t k = 0; k < im.pieces.size(); ++k) {
        const auto& pc = im.pieces[k];
        const std::string key = chain_key(build_chain(pc.term->idx, pc.r, pc.s, inst)) +
                                (pc.r == im.p ? "P" : "-") + (pc.s == im.p ? "P" : "-");
        source[k] = first.emplace(key, k).first->second;
    }
    tbb::parallel_for(size_t(0), im.pieces.size(), [&](size_t k) {
        if (source[k] != k) return;
        auto& pc = im.pieces[k];
        const auto& ri = im.idx_of_block[pc.r];
        const auto& si = im.idx_of_block[pc.s];
        std::vector<double> u, v;
        for (int i : ri) u.push_back(grid.u[i]);
        for (int j : si) v.push_back(grid.u[j]);
        pc.M = basic_kernel_matrix(pc.term->idx, pc.r, u, pc.s, v, inst, l2);
        for (size_t a = 0; a < ri.size(); ++a)
            for (size_t b = 0; b < si.size(); ++b) pc.M(a, b) *= std::sqrt(grid.w[ri[a]] * grid.w[si[b]]);
    });
    for (size_t k = 0; k < im.pieces.size(); ++k)
        if (source[k] != k) im.pieces[k].M = im.pieces[source[k]].M;
}

LimitKernel::~LimitKernel() = default;
LimitKernel::LimitKernel(LimitKernel&&) noexcept = default;

int LimitKernel::terms() const { return static_cast<int>(impl_->pieces.size()); }

Eigen::MatrixXcd LimitKernel::matrix(const std::vector<cplx>& theta) const {
    const auto& im = *impl_;
    ThetaTools tt(theta, std::vector<long>(im.p, 0));
    const int n = im.grid.size();
    Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(n, n);
    for (const auto& pc : im.pieces) {
        cplx c = 0.0;
        for (const auto& f : pc.term->coefs) c += f(tt, pc.r, pc.s);
        if (c == 0.0) continue;
        const auto& ri = im.idx_of_block[pc.r];
        const auto& si = im.idx_of_block[pc.s];
        for (size_t a = 0; a < ri.size(); ++a)
            for (size_t b = 0; b < si.size(); ++b) M(ri[a], si[b]) += c * pc.M(a, b);
    }
    return M;
}

cplx LimitKernel::det(const std::vector<cplx>& theta) const {
    Eigen::MatrixXcd M = matrix(theta);
    M += Eigen::MatrixXcd::Identity(M.rows(), M.cols());
    return lu_det(M);
}

cplx fredholm_det_F(const std::vector<cplx>& theta, const LimitInstance& inst, const NystromGrid& grid,
                    const LineSettings& ls) {
    return LimitKernel(inst, grid, ls).det(theta);
}

double auto_truncation(const LimitInstance& inst) {
    double m = 0.0;
    for (int k = 0; k < inst.p(); ++k) m = std::max(m, std::fabs(inst.xi[k] + inst.x[k] * inst.x[k]));
    return 12.0 + m * std::cbrt(inst.t.back());
}

LimitResult multitime_cdf(const LimitInstance& given, const LimitSettings& st) {
    const auto t0 = std::chrono::steady_clock::now();
    const LimitInstance inst = given.with_decaying_lines();
    LimitResult res;
    const int p = inst.p();
    if (p == 1) {
        res.value = tracy_widom(inst.xi[0] + inst.x[0] * inst.x[0]);
    } else {
        if (!(st.r_theta > 1.0)) throw domain_error("r_theta must exceed 1");
        const NystromGrid grid = NystromGrid::uniform(p, st.L > 0.0 ? st.L : auto_truncation(inst), st.grid_nodes, st.grid_panels);
        res.grid_nodes = grid.size();
        const LimitKernel lk(inst, grid, st.lines);
        auto sum = [&](int K) {
            const int dim = p - 1;
            long total = 1;
            for (int d = 0; d < dim; ++d) total *= K;
            std::vector<cplx> vals(total);
            tbb::parallel_for(0L, total, [&](long idx) {
                std::vector<cplx> th(dim);
                cplx wgt = 1.0;
                long rem = idx;
                for (int d = 0; d < dim; ++d) {
                    const cplx e = std::polar(st.r_theta, 2.0 * kPi * static_cast<double>(rem % K) / K);
                    rem /= K;
                    th[d] = e;
                    wgt *= e / (static_cast<double>(K) * (e - 1.0));
                }
                vals[idx] = wgt * lk.det(th);
            });
            cplx s = 0.0;
            for (const auto& v : vals) s += v;
            return s;
        };
        cplx val;
        if (st.theta_nodes > 0) {
            val = sum(st.theta_nodes);
            res.theta_nodes = st.theta_nodes;
        } else {
            int K = 8;
            cplx prev = sum(K);
            while (true) {
                if (2 * K > st.max_theta_nodes) throw convergence_error("theta trapezoid did not converge");
                K *= 2;
                val = sum(K);
                res.change = std::abs(val - prev);
                if (res.change < st.tol) break;
                prev = val;
            }
            res.theta_nodes = K;
        }
        res.value = val.real();
        res.imag = val.imag();
        if (std::fabs(res.imag) > std::max(st.tol, 1e-6))
            throw convergence_error("theta integral has a non-negligible imaginary part");
    }
    res.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

double airy_kernel(double x, double y) {
    const double ax = airy_unchecked(x), dx = airy_prime_unchecked(x);
    if (std::fabs(x - y) < 1e-9) return dx * dx - x * ax * ax;
    const double ay = airy_unchecked(y), dy = airy_prime_unchecked(y);
    return (ax * dy - dx * ay) / (x - y);
}

double tracy_widom(double s, int nodes, double L) {
    if (!(s >= -10.0 && s <= 6.0)) throw domain_error("tracy_widom: s outside [-10, 6]");
    if (nodes < 4 || !(L > 0.0)) throw domain_error("tracy_widom: bad quadrature");
    const GLRule& gl = gauss_legendre(nodes);
    std::vector<double> x(nodes), w(nodes), ai(nodes), aip(nodes);
    for (int i = 0; i < nodes; ++i) {
        x[i] = s + 0.5 * L * (gl.x[i] + 1.0);
        w[i] = 0.5 * L * gl.w[i];
        ai[i] = airy_unchecked(x[i]);
        aip[i] = airy_prime_unchecked(x[i]);
    }
    Eigen::MatrixXd M(nodes, nodes);
    for (int i = 0; i < nodes; ++i)
        for (int j = 0; j < nodes; ++j) {
            const double k = i == j ? aip[i] * aip[i] - x[i] * ai[i] * ai[i]
                                    : (ai[i] * aip[j] - aip[i] * ai[j]) / (x[i] - x[j]);
            M(i, j) = (i == j ? 1.0 : 0.0) - std::sqrt(w[i] * w[j]) * k;
        }
    return M.partialPivLu().determinant();
}

namespace {

Chain singletime_chain(double t, double x, double xi, double d, double D) {
    if (!(t > 0.0 && d > 0.0 && D > 0.0)) throw domain_error("singletime kernel: need t, d, D > 0");
    Chain c;
    push(c, {true, D, {t, x, xi}}, true);
    push(c, {false, -d, {t, x, xi}}, true);
    c.active = true;
    return c;
}

}  // namespace

double singletime_kernel(double t, double x, double xi, double u, double v, double d, double D,
                         const LineSettings& ls) {
    return chain_matrix(singletime_chain(t, x, xi, d, D), {u}, {v}, ls)(0, 0).real();
}

double singletime_det(double t, double x, double xi, int nodes, double L, const LineSettings& ls) {
    const GLRule& gl = gauss_legendre(nodes);
    std::vector<double> u(nodes), w(nodes);
    for (int i = 0; i < nodes; ++i) {
        u[i] = 0.5 * L * (gl.x[i] + 1.0);
        w[i] = 0.5 * L * gl.w[i];
    }
    LineSettings l2 = ls;
    l2.u_max = std::max(ls.u_max, L);
    const Eigen::MatrixXcd K = chain_matrix(singletime_chain(t, x, xi, 0.8, 1.0), u, u, l2);
    Eigen::MatrixXcd M(nodes, nodes);
    for (int i = 0; i < nodes; ++i)
        for (int j = 0; j < nodes; ++j) M(i, j) = (i == j ? 1.0 : 0.0) - std::sqrt(w[i] * w[j]) * K(i, j);
    return lu_det(M).real();
}

}  // namespace pngkpz
