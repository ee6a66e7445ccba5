#include "tessella/hmt.hpp"

#include <algorithm>
#include <cmath>

namespace tess {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178032973640562;

void validate_forest(const QuadForest& f) {
    if (f.levels < 1 || f.trees < 1) throw ShapeError("forest needs >= 1 level and tree");
    if (static_cast<int>(f.values.size()) != f.levels)
        throw ShapeError("forest value planes must match level count");
    for (int s = 1; s <= f.levels; ++s) {
        const std::size_t want = f.nodes_per_tree(s) * static_cast<std::size_t>(f.trees);
        if (f.values[s - 1].size() != want)
            throw ShapeError("forest scale size mismatch");
    }
}

void validate_params(const QuadForest& f, const HmtParams& p) {
    if (p.levels != f.levels) throw ShapeError("params level count mismatch");
    if (static_cast<int>(p.sigma.size()) != p.levels ||
        static_cast<int>(p.trans.size()) != p.levels - 1)
        throw ShapeError("params arrays sized inconsistently");
    for (const auto& sg : p.sigma)
        for (double v : sg)
            if (!(v > 0.0)) throw NumericError("state standard deviations must be positive");
    for (const auto& tr : p.trans)
        for (const auto& row : tr) {
            if (row[0] < 0.0 || row[1] < 0.0 || std::abs(row[0] + row[1] - 1.0) > 1e-9)
                throw NumericError("transition rows must lie on the simplex");
        }
    if (p.prior[0] < 0.0 || p.prior[1] < 0.0 || std::abs(p.prior[0] + p.prior[1] - 1.0) > 1e-9)
        throw NumericError("state prior must lie on the simplex");
}

struct Stats {
    std::vector<std::array<double, 2>> sw2, sn;
    std::vector<std::array<std::array<double, 2>, 2>> sxi;
    std::array<double, 2> sprior{0.0, 0.0};

    void reset(int levels) {
        sw2.assign(levels, {0.0, 0.0});
        sn.assign(levels, {0.0, 0.0});
        sxi.assign(std::max(levels - 1, 0), {{{0.0, 0.0}, {0.0, 0.0}}});
        sprior = {0.0, 0.0};
    }
};

struct Workspace {
    std::vector<std::vector<std::array<double, 2>>> beta, mu, out;

    void resize(const QuadForest& f) {
        beta.resize(f.levels);
        mu.resize(f.levels);
        out.resize(f.levels);
        for (int s = 1; s <= f.levels; ++s) {
            const std::size_t n = f.values[s - 1].size();
            beta[s - 1].resize(n);
            mu[s - 1].resize(n);
            out[s - 1].resize(n);
        }
    }
};

// One scaled upward-downward sweep. Fills EM sufficient statistics and/or
// node posteriors when requested; returns the data log-likelihood.
double updown(const QuadForest& f, const HmtParams& p, Workspace& ws, Stats* stats,
              HmtPosteriors* post) {
    const int L = f.levels;
    ws.resize(f);
    if (post) {
        post->node.resize(L);
        for (int s = 1; s <= L; ++s) post->node[s - 1].resize(f.values[s - 1].size());
    }

    double ll = 0.0;
    // running product of per-node normalizers with the exponent pulled out
    // every step (cheaper than a log per node, immune to underflow)
    double nprod = 1.0;
    long nexp = 0;

    // likelihood factor per node, max-normalized to dodge underflow; the
    // shift makes one factor exactly 1, so each node costs a single exp
    double q[2], c0[2];
    for (int s = 1; s <= L; ++s) {
        for (int m = 0; m < 2; ++m) {
            const double sg = p.sigma[s - 1][m];
            q[m] = 0.5 / (sg * sg);
            c0[m] = -std::log(sg) - kHalfLog2Pi;
        }
        const std::vector<double>& w = f.values[s - 1];
        auto& beta_s = ws.beta[s - 1];
        const int cside = s > 1 ? f.side(s - 1) : 0;
        const int pside = f.side(s);
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double ww = w[i] * w[i];
            const double lg0 = c0[0] - q[0] * ww;
            const double lg1 = c0[1] - q[1] * ww;
            double b0, b1;
            if (lg0 >= lg1) {
                b0 = 1.0;
                b1 = std::exp(lg1 - lg0);
                ll += lg0;
            } else {
                b0 = std::exp(lg0 - lg1);
                b1 = 1.0;
                ll += lg1;
            }
            if (s > 1) {
                // product of the 4 child messages
                const int t = static_cast<int>(i) / (pside * pside);
                const int rem = static_cast<int>(i) % (pside * pside);
                const int r = rem / pside, cc = rem % pside;
                double prod0 = 1.0, prod1 = 1.0;
                for (int dr = 0; dr < 2; ++dr) {
                    for (int dc = 0; dc < 2; ++dc) {
                        const std::size_t ci =
                            static_cast<std::size_t>(t) * cside * cside +
                            static_cast<std::size_t>(2 * r + dr) * cside + (2 * cc + dc);
                        prod0 *= ws.mu[s - 2][ci][0];
                        prod1 *= ws.mu[s - 2][ci][1];
                    }
                }
                b0 *= prod0;
                b1 *= prod1;
            }
            const double cn = b0 + b1;
            int e;
            nprod = std::frexp(nprod * cn, &e);
            nexp += e;
            beta_s[i] = {b0 / cn, b1 / cn};
            if (s < L) {
                const auto& tr = p.trans[s - 1];
                ws.mu[s - 1][i] = {tr[0][0] * beta_s[i][0] + tr[0][1] * beta_s[i][1],
                                   tr[1][0] * beta_s[i][0] + tr[1][1] * beta_s[i][1]};
            }
        }
    }
    ll += std::log(nprod) + static_cast<double>(nexp) * 0.69314718055994530941723212145818;

    // roots: fold in the prior
    for (int t = 0; t < f.trees; ++t) {
        const auto& br = ws.beta[L - 1][t];
        const double pr = p.prior[0] * br[0] + p.prior[1] * br[1];
        ll += std::log(pr);
        const double r0 = p.prior[0] * br[0] / pr;
        auto& out_root = ws.out[L - 1][t];
        out_root = {p.prior[0], p.prior[1]};
        const std::array<double, 2> rho{r0, 1.0 - r0};
        if (stats) {
            stats->sprior[0] += rho[0];
            stats->sprior[1] += rho[1];
            const double ww = f.values[L - 1][t] * f.values[L - 1][t];
            for (int m = 0; m < 2; ++m) {
                stats->sw2[L - 1][m] += rho[m] * ww;
                stats->sn[L - 1][m] += rho[m];
            }
        }
        if (post) post->node[L - 1][t] = rho;
    }

    for (int s = L - 1; s >= 1; --s) {
        const auto& tr = p.trans[s - 1];
        const int cside = f.side(s);
        const int pside = f.side(s + 1);
        const std::vector<double>& w = f.values[s - 1];
        for (std::size_t i = 0; i < w.size(); ++i) {
            const int t = static_cast<int>(i) / (cside * cside);
            const int rem = static_cast<int>(i) % (cside * cside);
            const int r = rem / cside, cc = rem % cside;
            const std::size_t pi = static_cast<std::size_t>(t) * pside * pside +
                                   static_cast<std::size_t>(r / 2) * pside + cc / 2;
            const auto& out_p = ws.out[s][pi];
            const auto& beta_p = ws.beta[s][pi];
            const auto& mu_c = ws.mu[s - 1][i];
            double T[2];
            for (int mp = 0; mp < 2; ++mp)
                T[mp] = mu_c[mp] > 0.0 ? out_p[mp] * beta_p[mp] / mu_c[mp] : 0.0;
            double u[2][2];
            for (int mp = 0; mp < 2; ++mp)
                for (int mc = 0; mc < 2; ++mc) u[mp][mc] = T[mp] * tr[mp][mc];
            double o0 = u[0][0] + u[1][0];
            double o1 = u[0][1] + u[1][1];
            const double osum = o0 + o1;
            auto& out_c = ws.out[s - 1][i];
            if (osum > 0.0) {
                out_c = {o0 / osum, o1 / osum};
            } else {
                out_c = {0.5, 0.5};
            }
            const auto& beta_c = ws.beta[s - 1][i];
            double xi[2][2];
            double xsum = 0.0;
            for (int mp = 0; mp < 2; ++mp)
                for (int mc = 0; mc < 2; ++mc) {
                    xi[mp][mc] = u[mp][mc] * beta_c[mc];
                    xsum += xi[mp][mc];
                }
            std::array<double, 2> rho{0.5, 0.5};
            if (xsum > 0.0) {
                for (int mp = 0; mp < 2; ++mp)
                    for (int mc = 0; mc < 2; ++mc) xi[mp][mc] /= xsum;
                rho = {xi[0][0] + xi[1][0], xi[0][1] + xi[1][1]};
            }
            if (stats) {
                auto& sx = stats->sxi[s - 1];
                for (int mp = 0; mp < 2; ++mp)
                    for (int mc = 0; mc < 2; ++mc) sx[mp][mc] += xi[mp][mc];
                const double ww = w[i] * w[i];
                for (int m = 0; m < 2; ++m) {
                    stats->sw2[s - 1][m] += rho[m] * ww;
                    stats->sn[s - 1][m] += rho[m];
                }
            }
            if (post) post->node[s - 1][i] = rho;
        }
    }
    return ll;
}

// States get a canonical order per scale: index 0 is the smaller sigma.
// Swapping the meaning of a scale's states permutes every adjacent
// transition consistently (columns where the scale is the child, rows where
// it is the parent) and the prior at the root scale.
void canonicalize(HmtParams& p) {
    for (int s = 1; s <= p.levels; ++s) {
        auto& sg = p.sigma[s - 1];
        if (sg[0] <= sg[1]) continue;
        std::swap(sg[0], sg[1]);
        if (s <= p.levels - 1) {
            auto& tr = p.trans[s - 1];
            std::swap(tr[0][0], tr[0][1]);
            std::swap(tr[1][0], tr[1][1]);
        }
        if (s >= 2) {
            auto& tr = p.trans[s - 2];
            std::swap(tr[0], tr[1]);
        }
        if (s == p.levels) std::swap(p.prior[0], p.prior[1]);
    }
}

}  // namespace

QuadForest build_forest(const MagnitudePyramid& pyr, int subband) {
    if (pyr.levels != 6 || pyr.subbands.size() != 6)
        throw ShapeError("quadtree forest expects a 6-level pyramid");
    if (subband < 0 || subband > 5) throw ShapeError("subband index out of range");
    QuadForest f;
    f.levels = 6;
    f.trees = 1;
    f.values.resize(6);
    for (int s = 1; s <= 6; ++s) {
        const Grid& g = pyr.subbands[s - 1][subband];
        const int want = f.side(s);
        if (g.rows() != want || g.cols() != want)
            throw ShapeError("subband grid does not form a complete quadtree");
        f.values[s - 1] = g.raw();
    }
    return f;
}

HmtPosteriors upward_downward(const QuadForest& forest, const HmtParams& params) {
    validate_forest(forest);
    validate_params(forest, params);
    Workspace ws;
    HmtPosteriors post;
    post.loglik = updown(forest, params, ws, nullptr, &post);
    return post;
}

HmtFit em_fit(const QuadForest& forest, const HmtConfig& config) {
    validate_forest(forest);
    if (forest.levels < 2) throw ShapeError("EM needs a forest with >= 2 scales");

    const int L = forest.levels;
    const double sd_floor = std::sqrt(config.variance_floor);

    // per-scale moments drive the deterministic initialization
    std::vector<double> sd(L);
    bool all_const = true;
    std::vector<double> const_val(L);
    for (int s = 1; s <= L; ++s) {
        const auto& w = forest.values[s - 1];
        double mean = 0.0;
        for (double v : w) mean += v;
        mean /= static_cast<double>(w.size());
        double ss = 0.0;
        bool is_const = true;
        for (double v : w) {
            ss += (v - mean) * (v - mean);
            if (v != w[0]) is_const = false;
        }
        sd[s - 1] = std::sqrt(ss / static_cast<double>(w.size()));
        const_val[s - 1] = w[0];
        if (!is_const) all_const = false;
    }

    HmtParams p;
    p.levels = L;
    p.prior = {0.5, 0.5};
    p.sigma.resize(L);
    p.trans.assign(L - 1, {{{0.8, 0.2}, {0.2, 0.8}}});

    if (all_const) {
        // no mixture identifiable anywhere; all-zero input keeps the floor
        for (int s = 1; s <= L; ++s) {
            const double sg = std::max(std::abs(const_val[s - 1]), sd_floor);
            p.sigma[s - 1] = {sg, sg};
        }
        p.degenerate = true;
        Workspace ws;
        HmtFit fit;
        fit.params = p;
        fit.loglik_trace = {updown(forest, p, ws, nullptr, nullptr)};
        fit.iterations = 0;
        return fit;
    }

    for (int s = 1; s <= L; ++s)
        p.sigma[s - 1] = {std::max(0.5 * sd[s - 1], sd_floor),
                          std::max(2.0 * sd[s - 1], sd_floor)};

    Workspace ws;
    Stats stats;
    HmtFit fit;
    double prev_ll = 0.0;
    for (int it = 0; it < config.max_iterations; ++it) {
        stats.reset(L);
        const double ll = updown(forest, p, ws, &stats, nullptr);
        fit.loglik_trace.push_back(ll);
        fit.iterations = it + 1;
        if (it > 0 && std::abs(ll - prev_ll) < config.tolerance * (std::abs(prev_ll) + 1e-12))
            break;
        prev_ll = ll;

        for (int s = 1; s <= L; ++s) {
            for (int m = 0; m < 2; ++m) {
                if (stats.sn[s - 1][m] > 1e-300) {
                    const double var =
                        std::max(stats.sw2[s - 1][m] / stats.sn[s - 1][m], config.variance_floor);
                    p.sigma[s - 1][m] = std::sqrt(var);
                }
            }
        }
        for (int cs = 1; cs <= L - 1; ++cs) {
            auto& tr = p.trans[cs - 1];
            const auto& sx = stats.sxi[cs - 1];
            for (int mp = 0; mp < 2; ++mp) {
                const double rs = sx[mp][0] + sx[mp][1];
                if (rs <= 0.0) continue;
                double e0 = std::clamp(sx[mp][0] / rs, config.eps_floor, 1.0);
                double e1 = std::clamp(sx[mp][1] / rs, config.eps_floor, 1.0);
                const double z = e0 + e1;
                tr[mp] = {e0 / z, e1 / z};
            }
        }
        const double pt = stats.sprior[0] + stats.sprior[1];
        if (pt > 0.0) {
            double p0 = std::clamp(stats.sprior[0] / pt, config.eps_floor, 1.0);
            double p1 = std::clamp(stats.sprior[1] / pt, config.eps_floor, 1.0);
            p.prior = {p0 / (p0 + p1), p1 / (p0 + p1)};
        }
    }

    canonicalize(p);
    fit.params = p;
    return fit;
}

std::array<double, 120> assemble_features(const std::array<HmtParams, 6>& per_subband,
                                          bool log_variance) {
    for (const HmtParams& p : per_subband) {
        if (p.levels != 6 || p.sigma.size() != 6 || p.trans.size() != 5)
            throw ShapeError("feature assembly expects 6 scales per subband");
    }
    std::array<double, 120> out{};
    for (int b = 0; b < 6; ++b) {
        const HmtParams& p = per_subband[b];
        const int base = 20 * b;
        for (int s = 6; s >= 1; --s) {
            for (int m = 0; m < 2; ++m) {
                const double sg = p.sigma[s - 1][m];
                out[base + 2 * (6 - s) + m] = log_variance ? 2.0 * std::log(sg) : sg * sg;
            }
        }
        for (int cs = 4; cs >= 1; --cs) {
            for (int m = 0; m < 2; ++m)
                out[base + 12 + 2 * (4 - cs) + m] = p.trans[cs - 1][m][m];
        }
    }
    return out;
}

}  // namespace tess
