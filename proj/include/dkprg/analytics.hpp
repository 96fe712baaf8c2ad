#pragma once
#include <cmath>
#include <stdexcept>
#include <vector>

// Closed-form model of the m-stop game: per-day vacancy probabilities, the
// active-agent recurrence, and the large-n exponential approximations. All
// quantities propagate as reals, never rounded to whole agents; rounding
// would visibly corrupt the utilization series by day 2.

namespace dkprg::analytics {

struct ModelParams {
    double n = 1.0; // initial agents = restaurants; real-valued n >= 1 admitted
    int m = 1;      // stops per day
};

struct DayStats {
    int t = 0;      // day index, 1-based
    double n_t = 0; // expected active agents at start of day
    double vp = 0;  // vacancy probability of the day
    double a_s = 0; // expected newly served agents (= newly reserved restaurants)
    double a_u = 0; // expected still-unserved agents (= still-vacant restaurants)
    double f = 0;   // expected cumulative utilization
};

struct Trajectory {
    ModelParams params;
    std::vector<DayStats> days;
};

// Thrown when a day has fewer expected active agents than stops; the closed
// form is no longer a probability and callers must apply the all-served rule.
class DegenerateDay : public std::domain_error {
public:
    DegenerateDay() : std::domain_error("degenerate day: n_t < m, all active agents are served") {}
};

namespace detail {
// ((n - w) / n)^n evaluated in log space.
inline double power_term(double n, double w) {
    if (w == n) return 0.0;
    return std::exp(n * std::log1p(-w / n));
}
} // namespace detail

// VP_t = ((n_t - m)/n_t)^(n_t). Defined only for n_t >= m.
inline double vacancy_probability(double n_t, int m) {
    if (m < 1) throw std::invalid_argument("vacancy_probability: m must be >= 1");
    if (n_t < m) throw DegenerateDay{};
    return detail::power_term(n_t, static_cast<double>(m));
}

// VP_{t,z} = ((n_t + 1 - z)/n_t)^(n_t): vacancy probability at the beginning
// of stop z. Exactly 1 at z = 1.
inline double stage_vacancy_probability(double n_t, int z) {
    if (z < 1) throw std::invalid_argument("stage_vacancy_probability: z must be >= 1");
    if (n_t < z - 1) throw std::invalid_argument("stage_vacancy_probability: requires n_t >= z - 1");
    if (z == 1) return 1.0;
    return detail::power_term(n_t, static_cast<double>(z - 1));
}

inline void validate(const ModelParams& params) {
    if (params.n < 1.0) throw std::invalid_argument("ModelParams: n must be >= 1");
    if (params.m < 1) throw std::invalid_argument("ModelParams: m must be >= 1");
    if (params.m > params.n) throw std::invalid_argument("ModelParams: m must be <= n on day 1");
}

// Iterates n_{t+1} = n_t * VP_t until full utilization or the horizon.
// A day starting with n_t <= m serves everyone: at n_t = m the closed form
// already gives VP = 0, and below m the all-served rule applies.
inline Trajectory trajectory(const ModelParams& params, int horizon = 256) {
    validate(params);
    if (horizon < 1) throw std::invalid_argument("trajectory: horizon must be >= 1");

    Trajectory out;
    out.params = params;
    double n_t = params.n;
    for (int t = 1; t <= horizon; ++t) {
        DayStats day;
        day.t = t;
        day.n_t = n_t;
        if (n_t <= params.m) {
            day.vp = 0.0;
            day.a_s = n_t;
            day.a_u = 0.0;
            day.f = 1.0;
            out.days.push_back(day);
            break;
        }
        day.vp = detail::power_term(n_t, static_cast<double>(params.m));
        day.a_u = n_t * day.vp;
        day.a_s = n_t - day.a_u;
        day.f = (params.n - day.a_u) / params.n;
        out.days.push_back(day);
        n_t = day.a_u;
    }
    return out;
}

// P(restaurant in one of w designated positions) = w/n under equiprobable tours.
inline double position_probability(int n, int w) {
    if (n < 1) throw std::invalid_argument("position_probability: n must be >= 1");
    if (w < 1 || w > n) throw std::invalid_argument("position_probability: w must be in 1..n");
    return static_cast<double>(w) / n;
}

// Binomial mass: P(restaurant appears exactly l times across n independent
// tours in one of w designated positions) = C(n,l) (w/n)^l ((n-w)/n)^(n-l).
inline double appearance_distribution(int n, int w, int l) {
    if (n < 1) throw std::invalid_argument("appearance_distribution: n must be >= 1");
    if (w < 1 || w > n) throw std::invalid_argument("appearance_distribution: w must be in 1..n");
    if (l < 0 || l > n) throw std::invalid_argument("appearance_distribution: l must be in 0..n");
    const double p = static_cast<double>(w) / n;
    if (w == n) return l == n ? 1.0 : 0.0;
    const double log_choose = std::lgamma(n + 1.0) - std::lgamma(l + 1.0) - std::lgamma(n - l + 1.0);
    return std::exp(log_choose + l * std::log(p) + (n - l) * std::log1p(-p));
}

// f_1 = 1 - ((n - m)/n)^n, exactly the trajectory's first-day utilization.
inline double day1_utilization_exact(double n, int m) {
    if (m < 1) throw std::invalid_argument("day1_utilization_exact: m must be >= 1");
    if (n < m) throw DegenerateDay{};
    return 1.0 - detail::power_term(n, static_cast<double>(m));
}

// Large-n limits: VP_t ~ e^(-tm), f_t ~ 1 - e^(-tm), n_{t+1} ~ n e^(-tm).
struct ApproxDayStats {
    int t = 0;
    double n_next = 0; // expected active agents entering day t+1
    double a_s = 0;
    double a_u = 0;
    double vp = 0;
    double f = 0;
};

inline ApproxDayStats approx_stats(double n, int m, int t) {
    if (t < 1) throw std::invalid_argument("approx_stats: t must be >= 1");
    if (m < 1) throw std::invalid_argument("approx_stats: m must be >= 1");
    ApproxDayStats s;
    s.t = t;
    const double decay = std::exp(-static_cast<double>(t) * m);
    const double prev_decay = std::exp(-static_cast<double>(t - 1) * m);
    s.n_next = n * decay;
    s.a_u = n * decay;
    s.a_s = n * (prev_decay - decay);
    s.vp = decay;
    s.f = 1.0 - decay;
    return s;
}

} // namespace dkprg::analytics
