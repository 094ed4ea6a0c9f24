// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <vector>

#include "procam/math.hpp"

namespace procam::ad {

// Minimal reverse-mode scalar engine.  One Tape per thread, reset between
// uses; nodes have at most two parents with precomputed local partials.
class Tape {
  public:
    struct Node {
        int a, b;
        real da, db;
    };

    void clear() {
        nodes_.clear();
        vals_.clear();
    }
    int push(real v, int a = -1, real da = 0, int b = -1, real db = 0) {
        nodes_.push_back({a, b, da, db});
        vals_.push_back(v);
        return int(vals_.size()) - 1;
    }
    real value(int i) const { return vals_[i]; }
    std::size_t size() const { return vals_.size(); }

    // Accumulates seeds (index, weight) and propagates; adj is resized.
    void backward(const std::vector<std::pair<int, real>>& seeds,
                  std::vector<real>& adj) const {
        adj.assign(vals_.size(), 0.0);
        for (auto& [i, w] : seeds)
            if (i >= 0) adj[i] += w;
        for (int i = int(vals_.size()) - 1; i >= 0; --i) {
            real g = adj[i];
            if (g == 0) continue;
            const Node& n = nodes_[i];
            if (n.a >= 0) adj[n.a] += g * n.da;
            if (n.b >= 0) adj[n.b] += g * n.db;
        }
    }

  private:
    std::vector<Node> nodes_;
    std::vector<real> vals_;
};

// A value on the tape; index -1 marks a plain constant.
struct Var {
    Tape* t = nullptr;
    int i = -1;
    real v = 0;

    Var() = default;
    Var(real c) : v(c) {}  // NOLINT: implicit constant lift
    Var(Tape* t_, int i_, real v_) : t(t_), i(i_), v(v_) {}
    static Var input(Tape& t, real v) { return {&t, t.push(v), v}; }
};

inline Tape* tape_of(const Var& a, const Var& b) { return a.t ? a.t : b.t; }

inline Var operator+(const Var& a, const Var& b) {
    Tape* t = tape_of(a, b);
    real v = a.v + b.v;
    if (!t) return {nullptr, -1, v};
    return {t, t->push(v, a.i, 1, b.i, 1), v};
}
inline Var operator-(const Var& a, const Var& b) {
    Tape* t = tape_of(a, b);
    real v = a.v - b.v;
    if (!t) return {nullptr, -1, v};
    return {t, t->push(v, a.i, 1, b.i, -1), v};
}
inline Var operator-(const Var& a) { return Var(0.0) - a; }
inline Var operator*(const Var& a, const Var& b) {
    Tape* t = tape_of(a, b);
    real v = a.v * b.v;
    if (!t) return {nullptr, -1, v};
    return {t, t->push(v, a.i, b.v, b.i, a.v), v};
}
inline Var operator/(const Var& a, const Var& b) {
    Tape* t = tape_of(a, b);
    real v = a.v / b.v;
    if (!t) return {nullptr, -1, v};
    return {t, t->push(v, a.i, 1 / b.v, b.i, -v / b.v), v};
}
inline Var sqrt(const Var& a) {
    real v = std::sqrt(a.v);
    if (!a.t) return {nullptr, -1, v};
    return {a.t, a.t->push(v, a.i, v > 0 ? 0.5 / v : 0.0), v};
}
inline Var exp(const Var& a) {
    real v = std::exp(a.v);
    if (!a.t) return {nullptr, -1, v};
    return {a.t, a.t->push(v, a.i, v), v};
}
// max with a constant floor; sub-gradient 0 at the clamp.
inline Var vmax(const Var& a, real floor) {
    if (a.v >= floor) return a;
    return Var(floor);
}

inline bool operator>(const Var& a, real c) { return a.v > c; }
inline bool operator<(const Var& a, real c) { return a.v < c; }

}  // namespace procam::ad
