#include "mechemu/matching.hpp"

#include "mechemu/errors.hpp"

#include <algorithm>
#include <numeric>
#include <utility>

namespace mechemu {

namespace {

// Primal-dual blossom algorithm after Galil (1986), in the formulation of the
// well-known mwmatching reference implementation. Vertices are 0..V-1; blossoms
// are V..2V-1. Edge k has endpoints 2k (its u) and 2k+1 (its v).
class Blossom {
public:
    Blossom(const std::vector<WeightedEdge>& edges, bool max_cardinality)
        : edges_(edges), max_cardinality_(max_cardinality) {
        for (const auto& e : edges_) {
            if (e.u < 0 || e.v < 0 || e.u == e.v) throw InvalidArgument("matching edge has invalid endpoints");
            nv_ = std::max({nv_, e.u + 1, e.v + 1});
        }
    }

    std::vector<int> solve();

private:
    using i64 = std::int64_t;

    i64 slack(int k) const {
        const auto& e = edges_[k];
        return dual_[e.u] + dual_[e.v] - 2 * e.weight;
    }
    int endpoint(int p) const { return p % 2 == 0 ? edges_[p / 2].u : edges_[p / 2].v; }

    void leaves(int b, std::vector<int>& out) const {
        if (b < nv_) {
            out.push_back(b);
            return;
        }
        for (int t : childs_[b]) leaves(t, out);
    }
    std::vector<int> leaves(int b) const {
        std::vector<int> out;
        leaves(b, out);
        return out;
    }
    static int wrap(int j, int len) { return ((j % len) + len) % len; }

    void assign_label(int w, int t, int p);
    int scan_blossom(int v, int w);
    void add_blossom(int base, int k);
    void expand_blossom(int b, bool endstage);
    void augment_blossom(int b, int v);
    void augment_matching(int k);

    const std::vector<WeightedEdge>& edges_;
    bool max_cardinality_;
    int nv_ = 0;

    std::vector<std::vector<int>> neighbend_;
    std::vector<int> mate_, label_, labelend_, inblossom_, parent_, base_, bestedge_;
    std::vector<std::vector<int>> childs_, endps_, bestedges_;
    std::vector<bool> has_bestedges_;
    std::vector<int> unused_;
    std::vector<i64> dual_;
    std::vector<char> allow_;
    std::vector<int> queue_;
};

void Blossom::assign_label(int w, int t, int p) {
    const int b = inblossom_[w];
    label_[w] = label_[b] = t;
    labelend_[w] = labelend_[b] = p;
    bestedge_[w] = bestedge_[b] = -1;
    if (t == 1) {
        leaves(b, queue_);
    } else if (t == 2) {
        const int base = base_[b];
        assign_label(endpoint(mate_[base]), 1, mate_[base] ^ 1);
    }
}

int Blossom::scan_blossom(int v, int w) {
    std::vector<int> path;
    int base = -1;
    while (v != -1 || w != -1) {
        int b = inblossom_[v];
        if (label_[b] & 4) {
            base = base_[b];
            break;
        }
        path.push_back(b);
        label_[b] = 5;
        if (labelend_[b] == -1) {
            v = -1;
        } else {
            v = endpoint(labelend_[b]);
            b = inblossom_[v];
            v = endpoint(labelend_[b]);
        }
        if (w != -1) std::swap(v, w);
    }
    for (int b : path) label_[b] = 1;
    return base;
}

void Blossom::add_blossom(int base, int k) {
    int v = edges_[k].u;
    int w = edges_[k].v;
    const int bb = inblossom_[base];
    int bv = inblossom_[v];
    int bw = inblossom_[w];
    const int b = unused_.back();
    unused_.pop_back();
    base_[b] = base;
    parent_[b] = -1;
    parent_[bb] = b;
    auto& path = childs_[b];
    auto& endps = endps_[b];
    path.clear();
    endps.clear();
    while (bv != bb) {
        parent_[bv] = b;
        path.push_back(bv);
        endps.push_back(labelend_[bv]);
        v = endpoint(labelend_[bv]);
        bv = inblossom_[v];
    }
    path.push_back(bb);
    std::reverse(path.begin(), path.end());
    std::reverse(endps.begin(), endps.end());
    endps.push_back(2 * k);
    while (bw != bb) {
        parent_[bw] = b;
        path.push_back(bw);
        endps.push_back(labelend_[bw] ^ 1);
        w = endpoint(labelend_[bw]);
        bw = inblossom_[w];
    }
    label_[b] = 1;
    labelend_[b] = labelend_[bb];
    dual_[b] = 0;
    for (int leaf : leaves(b)) {
        if (label_[inblossom_[leaf]] == 2) queue_.push_back(leaf);
        inblossom_[leaf] = b;
    }

    std::vector<int> bestedgeto(2 * nv_, -1);
    for (int sub : path) {
        std::vector<int> candidates;
        if (!has_bestedges_[sub]) {
            for (int leaf : leaves(sub)) {
                for (int p : neighbend_[leaf]) candidates.push_back(p / 2);
            }
        } else {
            candidates = bestedges_[sub];
        }
        for (int e : candidates) {
            int i = edges_[e].u;
            int j = edges_[e].v;
            if (inblossom_[j] == b) std::swap(i, j);
            const int bj = inblossom_[j];
            if (bj != b && label_[bj] == 1 && (bestedgeto[bj] == -1 || slack(e) < slack(bestedgeto[bj]))) {
                bestedgeto[bj] = e;
            }
        }
        bestedges_[sub].clear();
        has_bestedges_[sub] = false;
        bestedge_[sub] = -1;
    }
    bestedges_[b].clear();
    for (int e : bestedgeto) {
        if (e != -1) bestedges_[b].push_back(e);
    }
    has_bestedges_[b] = true;
    bestedge_[b] = -1;
    for (int e : bestedges_[b]) {
        if (bestedge_[b] == -1 || slack(e) < slack(bestedge_[b])) bestedge_[b] = e;
    }
}

void Blossom::expand_blossom(int b, bool endstage) {
    const std::vector<int> children = childs_[b];
    for (int s : children) {
        parent_[s] = -1;
        if (s < nv_) {
            inblossom_[s] = s;
        } else if (endstage && dual_[s] == 0) {
            expand_blossom(s, endstage);
        } else {
            for (int leaf : leaves(s)) inblossom_[leaf] = s;
        }
    }
    if (!endstage && label_[b] == 2) {
        const auto& ch = childs_[b];
        const auto& ep = endps_[b];
        const int len = static_cast<int>(ch.size());
        const int entrychild = inblossom_[endpoint(labelend_[b] ^ 1)];
        int j = static_cast<int>(std::find(ch.begin(), ch.end(), entrychild) - ch.begin());
        int jstep, endptrick;
        if (j & 1) {
            j -= len;
            jstep = 1;
            endptrick = 0;
        } else {
            jstep = -1;
            endptrick = 1;
        }
        int p = labelend_[b];
        while (j != 0) {
            label_[endpoint(p ^ 1)] = 0;
            label_[endpoint(ep[wrap(j - endptrick, len)] ^ endptrick ^ 1)] = 0;
            assign_label(endpoint(p ^ 1), 2, p);
            allow_[ep[wrap(j - endptrick, len)] / 2] = 1;
            j += jstep;
            p = ep[wrap(j - endptrick, len)] ^ endptrick;
            allow_[p / 2] = 1;
            j += jstep;
        }
        int bv = ch[wrap(j, len)];
        label_[endpoint(p ^ 1)] = label_[bv] = 2;
        labelend_[endpoint(p ^ 1)] = labelend_[bv] = p;
        bestedge_[bv] = -1;
        j += jstep;
        while (ch[wrap(j, len)] != entrychild) {
            bv = ch[wrap(j, len)];
            if (label_[bv] == 1) {
                j += jstep;
                continue;
            }
            int found = -1;
            for (int leaf : leaves(bv)) {
                if (label_[leaf] != 0) {
                    found = leaf;
                    break;
                }
            }
            if (found != -1) {
                label_[found] = 0;
                label_[endpoint(mate_[base_[bv]])] = 0;
                assign_label(found, 2, labelend_[found]);
            }
            j += jstep;
        }
    }
    label_[b] = labelend_[b] = -1;
    childs_[b].clear();
    endps_[b].clear();
    base_[b] = -1;
    bestedges_[b].clear();
    has_bestedges_[b] = false;
    bestedge_[b] = -1;
    unused_.push_back(b);
}

void Blossom::augment_blossom(int b, int v) {
    int t = v;
    while (parent_[t] != b) t = parent_[t];
    if (t >= nv_) augment_blossom(t, v);
    auto& ch = childs_[b];
    auto& ep = endps_[b];
    const int len = static_cast<int>(ch.size());
    const int i = static_cast<int>(std::find(ch.begin(), ch.end(), t) - ch.begin());
    int j = i;
    int jstep, endptrick;
    if (i & 1) {
        j -= len;
        jstep = 1;
        endptrick = 0;
    } else {
        jstep = -1;
        endptrick = 1;
    }
    while (j != 0) {
        j += jstep;
        t = ch[wrap(j, len)];
        const int p = ep[wrap(j - endptrick, len)] ^ endptrick;
        if (t >= nv_) augment_blossom(t, endpoint(p));
        j += jstep;
        t = ch[wrap(j, len)];
        if (t >= nv_) augment_blossom(t, endpoint(p ^ 1));
        mate_[endpoint(p)] = p ^ 1;
        mate_[endpoint(p ^ 1)] = p;
    }
    std::rotate(ch.begin(), ch.begin() + i, ch.end());
    std::rotate(ep.begin(), ep.begin() + i, ep.end());
    base_[b] = base_[ch[0]];
}

void Blossom::augment_matching(int k) {
    const std::pair<int, int> starts[2] = {{edges_[k].u, 2 * k + 1}, {edges_[k].v, 2 * k}};
    for (auto [s, p] : starts) {
        while (true) {
            const int bs = inblossom_[s];
            if (bs >= nv_) augment_blossom(bs, s);
            mate_[s] = p;
            if (labelend_[bs] == -1) break;
            const int t = endpoint(labelend_[bs]);
            const int bt = inblossom_[t];
            s = endpoint(labelend_[bt]);
            const int j = endpoint(labelend_[bt] ^ 1);
            if (bt >= nv_) augment_blossom(bt, j);
            mate_[j] = labelend_[bt];
            p = labelend_[bt] ^ 1;
        }
    }
}

std::vector<int> Blossom::solve() {
    const int ne = static_cast<int>(edges_.size());
    if (ne == 0) return std::vector<int>(nv_, -1);
    i64 maxweight = 0;
    for (const auto& e : edges_) maxweight = std::max(maxweight, e.weight);

    neighbend_.assign(nv_, {});
    for (int k = 0; k < ne; ++k) {
        neighbend_[edges_[k].u].push_back(2 * k + 1);
        neighbend_[edges_[k].v].push_back(2 * k);
    }
    mate_.assign(nv_, -1);
    label_.assign(2 * nv_, 0);
    labelend_.assign(2 * nv_, -1);
    inblossom_.resize(nv_);
    std::iota(inblossom_.begin(), inblossom_.end(), 0);
    parent_.assign(2 * nv_, -1);
    childs_.assign(2 * nv_, {});
    base_.assign(2 * nv_, -1);
    std::iota(base_.begin(), base_.begin() + nv_, 0);
    endps_.assign(2 * nv_, {});
    bestedge_.assign(2 * nv_, -1);
    bestedges_.assign(2 * nv_, {});
    has_bestedges_.assign(2 * nv_, false);
    unused_.clear();
    for (int b = nv_; b < 2 * nv_; ++b) unused_.push_back(b);
    dual_.assign(2 * nv_, 0);
    std::fill(dual_.begin(), dual_.begin() + nv_, maxweight);
    allow_.assign(ne, 0);

    for (int stage = 0; stage < nv_; ++stage) {
        std::fill(label_.begin(), label_.end(), 0);
        std::fill(bestedge_.begin(), bestedge_.end(), -1);
        for (int b = nv_; b < 2 * nv_; ++b) {
            bestedges_[b].clear();
            has_bestedges_[b] = false;
        }
        std::fill(allow_.begin(), allow_.end(), 0);
        queue_.clear();
        for (int v = 0; v < nv_; ++v) {
            if (mate_[v] == -1 && label_[inblossom_[v]] == 0) assign_label(v, 1, -1);
        }

        bool augmented = false;
        while (true) {
            while (!queue_.empty() && !augmented) {
                const int v = queue_.back();
                queue_.pop_back();
                for (int p : neighbend_[v]) {
                    const int k = p / 2;
                    const int w = endpoint(p);
                    if (inblossom_[v] == inblossom_[w]) continue;
                    i64 kslack = 0;
                    if (!allow_[k]) {
                        kslack = slack(k);
                        if (kslack <= 0) allow_[k] = 1;
                    }
                    if (allow_[k]) {
                        if (label_[inblossom_[w]] == 0) {
                            assign_label(w, 2, p ^ 1);
                        } else if (label_[inblossom_[w]] == 1) {
                            const int base = scan_blossom(v, w);
                            if (base >= 0) {
                                add_blossom(base, k);
                            } else {
                                augment_matching(k);
                                augmented = true;
                                break;
                            }
                        } else if (label_[w] == 0) {
                            label_[w] = 2;
                            labelend_[w] = p ^ 1;
                        }
                    } else if (label_[inblossom_[w]] == 1) {
                        const int b = inblossom_[v];
                        if (bestedge_[b] == -1 || kslack < slack(bestedge_[b])) bestedge_[b] = k;
                    } else if (label_[w] == 0) {
                        if (bestedge_[w] == -1 || kslack < slack(bestedge_[w])) bestedge_[w] = k;
                    }
                }
            }
            if (augmented) break;

            int deltatype = -1;
            i64 delta = 0;
            int deltaedge = -1;
            int deltablossom = -1;
            if (!max_cardinality_) {
                deltatype = 1;
                delta = *std::min_element(dual_.begin(), dual_.begin() + nv_);
            }
            for (int v = 0; v < nv_; ++v) {
                if (label_[inblossom_[v]] == 0 && bestedge_[v] != -1) {
                    const i64 d = slack(bestedge_[v]);
                    if (deltatype == -1 || d < delta) {
                        delta = d;
                        deltatype = 2;
                        deltaedge = bestedge_[v];
                    }
                }
            }
            for (int b = 0; b < 2 * nv_; ++b) {
                if (parent_[b] == -1 && label_[b] == 1 && bestedge_[b] != -1) {
                    const i64 d = slack(bestedge_[b]) / 2;
                    if (deltatype == -1 || d < delta) {
                        delta = d;
                        deltatype = 3;
                        deltaedge = bestedge_[b];
                    }
                }
            }
            for (int b = nv_; b < 2 * nv_; ++b) {
                if (base_[b] >= 0 && parent_[b] == -1 && label_[b] == 2 &&
                    (deltatype == -1 || dual_[b] < delta)) {
                    delta = dual_[b];
                    deltatype = 4;
                    deltablossom = b;
                }
            }
            if (deltatype == -1) {
                deltatype = 1;
                delta = std::max<i64>(0, *std::min_element(dual_.begin(), dual_.begin() + nv_));
            }

            for (int v = 0; v < nv_; ++v) {
                if (label_[inblossom_[v]] == 1) {
                    dual_[v] -= delta;
                } else if (label_[inblossom_[v]] == 2) {
                    dual_[v] += delta;
                }
            }
            for (int b = nv_; b < 2 * nv_; ++b) {
                if (base_[b] >= 0 && parent_[b] == -1) {
                    if (label_[b] == 1) {
                        dual_[b] += delta;
                    } else if (label_[b] == 2) {
                        dual_[b] -= delta;
                    }
                }
            }

            if (deltatype == 1) {
                break;
            } else if (deltatype == 2) {
                allow_[deltaedge] = 1;
                int i = edges_[deltaedge].u;
                if (label_[inblossom_[i]] == 0) i = edges_[deltaedge].v;
                queue_.push_back(i);
            } else if (deltatype == 3) {
                allow_[deltaedge] = 1;
                queue_.push_back(edges_[deltaedge].u);
            } else {
                expand_blossom(deltablossom, false);
            }
        }
        if (!augmented) break;

        for (int b = nv_; b < 2 * nv_; ++b) {
            if (parent_[b] == -1 && base_[b] >= 0 && label_[b] == 1 && dual_[b] == 0) expand_blossom(b, true);
        }
    }

    std::vector<int> result(nv_, -1);
    for (int v = 0; v < nv_; ++v) {
        if (mate_[v] >= 0) result[v] = endpoint(mate_[v]);
    }
    return result;
}

}  // namespace

std::vector<int> max_weight_matching(const std::vector<WeightedEdge>& edges, bool max_cardinality) {
    Blossom solver(edges, max_cardinality);
    return solver.solve();
}

std::vector<int> min_cost_perfect_matching(const std::vector<std::int64_t>& cost, int n) {
    if (n < 2 || n % 2 != 0) throw InvalidArgument("perfect matching needs an even number of points");
    if (cost.size() != static_cast<std::size_t>(n) * static_cast<std::size_t>(n)) {
        throw InvalidArgument("cost matrix has the wrong size");
    }
    std::int64_t max_cost = 0;
    for (auto c : cost) {
        if (c < 0) throw InvalidArgument("matching costs must be non-negative");
        max_cost = std::max(max_cost, c);
    }
    // On a complete graph with strictly positive weights the maximum-weight
    // maximum-cardinality matching is perfect and minimises total cost.
    std::vector<WeightedEdge> edges;
    edges.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            edges.push_back({i, j, max_cost + 1 - cost[static_cast<std::size_t>(i) * n + j]});
        }
    }
    auto mate = max_weight_matching(edges, true);
    mate.resize(n, -1);
    for (int v = 0; v < n; ++v) {
        if (mate[v] < 0) throw NumericalFailure("matching is not perfect");
    }
    return mate;
}

std::vector<int> greedy_perfect_matching(const std::vector<double>& cost, int n) {
    if (n < 2 || n % 2 != 0) throw InvalidArgument("perfect matching needs an even number of points");
    std::vector<std::pair<int, int>> pairs;
    pairs.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
    }
    auto at = [&](const std::pair<int, int>& p) { return cost[static_cast<std::size_t>(p.first) * n + p.second]; };
    std::stable_sort(pairs.begin(), pairs.end(), [&](const auto& a, const auto& b) { return at(a) < at(b); });
    std::vector<int> mate(n, -1);
    for (const auto& [i, j] : pairs) {
        if (mate[i] == -1 && mate[j] == -1) {
            mate[i] = j;
            mate[j] = i;
        }
    }
    return mate;
}

}  // namespace mechemu
