#pragma once

// First-passage analysis over the action chain: given a row-stochastic
// matrix of action-to-action transition probabilities, computes
// first-passage probabilities, cumulative reach probabilities, and a
// transience diagnostic (finite expected visit count).

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace tsc {

struct MarkovError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class TransitionMatrix {
public:
    explicit TransitionMatrix(std::vector<std::vector<double>> rows) : p_(std::move(rows)) {
        n_ = static_cast<int>(p_.size());
        if (n_ == 0) throw MarkovError("empty transition matrix");
        for (const auto& row : p_) {
            if (static_cast<int>(row.size()) != n_) throw MarkovError("transition matrix must be square");
            double sum = 0.0;
            for (double v : row) {
                if (v < 0.0 || v > 1.0) throw MarkovError("transition probability outside [0,1]");
                sum += v;
            }
            if (std::abs(sum - 1.0) > 1e-9) throw MarkovError("transition matrix row does not sum to 1");
        }
    }

    // Empirical action-to-action frequencies. Rows for actions never taken
    // get add-one smoothing (uniform); observed rows keep raw frequencies.
    static TransitionMatrix estimate(std::span<const int> actions, int n_actions) {
        if (actions.size() < 2) throw MarkovError("need at least 2 actions to estimate transitions");
        std::vector<std::vector<double>> counts(static_cast<std::size_t>(n_actions),
                                                std::vector<double>(static_cast<std::size_t>(n_actions), 0.0));
        for (std::size_t k = 0; k + 1 < actions.size(); ++k) {
            int i = actions[k], j = actions[k + 1];
            if (i < 0 || i >= n_actions || j < 0 || j >= n_actions)
                throw MarkovError("action log entry out of range");
            counts[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] += 1.0;
        }
        for (auto& row : counts) {
            double sum = 0.0;
            for (double v : row) sum += v;
            if (sum == 0.0) {
                for (double& v : row) v = 1.0 / n_actions;
            } else {
                for (double& v : row) v /= sum;
            }
        }
        return TransitionMatrix(std::move(counts));
    }

    int size() const { return n_; }
    double at(int i, int j) const { return p_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]; }

    TransitionMatrix multiply(const TransitionMatrix& other) const {
        std::vector<std::vector<double>> out(static_cast<std::size_t>(n_),
                                             std::vector<double>(static_cast<std::size_t>(n_), 0.0));
        for (int i = 0; i < n_; ++i)
            for (int k = 0; k < n_; ++k) {
                double pik = at(i, k);
                if (pik == 0.0) continue;
                for (int j = 0; j < n_; ++j)
                    out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] += pik * other.at(k, j);
            }
        TransitionMatrix m(1);
        m.n_ = n_;
        m.p_ = std::move(out);
        return m;
    }

private:
    explicit TransitionMatrix(int) {}  // unchecked internal constructor
    int n_ = 0;
    std::vector<std::vector<double>> p_;
};

namespace detail {
// n-step entries P_ij^(k) and P_jj^(k) for k = 1..n
struct PowerProfile {
    std::vector<double> ij;
    std::vector<double> jj;
};

inline PowerProfile power_profile(const TransitionMatrix& p, int i, int j, int n) {
    PowerProfile prof;
    prof.ij.reserve(static_cast<std::size_t>(n));
    prof.jj.reserve(static_cast<std::size_t>(n));
    TransitionMatrix pk = p;
    for (int k = 1; k <= n; ++k) {
        if (k > 1) pk = pk.multiply(p);
        prof.ij.push_back(pk.at(i, j));
        prof.jj.push_back(pk.at(j, j));
    }
    return prof;
}

inline void check_state(const TransitionMatrix& p, int s) {
    if (s < 0 || s >= p.size()) throw MarkovError("state index out of range");
}
}  // namespace detail

// f_ij(k) for k = 1..n:
//   f_ij(1) = P_ij
//   f_ij(n) = P_ij^(n) - sum_{k=1}^{n-1} f_ij(k) * P_jj^(n-k)
inline std::vector<double> first_passage_profile(const TransitionMatrix& p, int i, int j, int n) {
    detail::check_state(p, i);
    detail::check_state(p, j);
    if (n < 1) throw MarkovError("first passage horizon must be >= 1");
    auto prof = detail::power_profile(p, i, j, n);
    std::vector<double> f(static_cast<std::size_t>(n));
    for (int m = 1; m <= n; ++m) {
        double v = prof.ij[static_cast<std::size_t>(m - 1)];
        for (int k = 1; k < m; ++k)
            v -= f[static_cast<std::size_t>(k - 1)] * prof.jj[static_cast<std::size_t>(m - k - 1)];
        f[static_cast<std::size_t>(m - 1)] = v;
    }
    return f;
}

inline double first_passage(const TransitionMatrix& p, int i, int j, int n) {
    return first_passage_profile(p, i, j, n).back();
}

// q_ij(m) = sum_{n=1..m} f_ij(n): probability of reaching j from i
// at least once within m transitions.
inline double reach_probability(const TransitionMatrix& p, int i, int j, int m) {
    auto f = first_passage_profile(p, i, j, m);
    double q = 0.0;
    for (double v : f) q += v;
    if (q > 1.0 + 1e-9) throw MarkovError("reach probability exceeds 1");
    return q;
}

// Partial sum of return probabilities sum_{n=1..horizon} P_jj^(n).
// The state is effectively transient when the tail increments vanish,
// i.e. the expected number of return visits is finite.
struct TransienceReport {
    double visit_sum = 0.0;
    bool converged = false;
};

inline TransienceReport transience_check(const TransitionMatrix& p, int j, int horizon,
                                         double tolerance) {
    detail::check_state(p, j);
    if (horizon < 1) throw MarkovError("transience horizon must be >= 1");
    TransienceReport rep;
    TransitionMatrix pk = p;
    double last_increment = 0.0;
    for (int n = 1; n <= horizon; ++n) {
        if (n > 1) pk = pk.multiply(p);
        last_increment = pk.at(j, j);
        rep.visit_sum += last_increment;
    }
    rep.converged = last_increment < tolerance;
    return rep;
}

}  // namespace tsc
