#pragma once

#include <span>
#include <string_view>
#include <vector>

namespace posyn::stats {

enum class Method { mann_whitney_u, independent_t };
enum class Alternative { two_sided, less, greater };
enum class MwuMode { automatic, exact, normal_approx };

/// Largest pooled sample size for which the exact null distribution is
/// enumerated.
inline constexpr int kExactLimit = 16;

struct TestResult {
    double statistic = 0.0;
    double p_value = 1.0;
    /// Mann-Whitney: eta^2 = Z^2 / N with the uncorrected Z. t-test: Cohen's d.
    double effect_size = 0.0;
    Method method = Method::mann_whitney_u;
    int n1 = 0;
    int n2 = 0;
    /// Normal deviate (Mann-Whitney) or degrees of freedom (t-test).
    double z = 0.0;
    double df = 0.0;
    bool exact = false;
};

std::string_view to_string(Method m);
std::string_view to_string(Alternative a);
Alternative parse_alternative(std::string_view s);
MwuMode parse_mwu_mode(std::string_view s);

/// Midranks (1-based) of the pooled sample a ++ b.
std::vector<double> midranks(std::span<const double> pooled);

/// U statistic of `a`: the number of pairs (x in a, y in b) with x > y, ties
/// counting one half.
double u_statistic(std::span<const double> a, std::span<const double> b);

/// Mann-Whitney U. In exact mode every C(N, n1) assignment of the observed
/// midranks to the first sample is enumerated (N <= 16). The approximation
/// is tie-corrected with a continuity correction. automatic picks exact when
/// N <= 16.
TestResult mann_whitney_u(std::span<const double> a, std::span<const double> b,
                          MwuMode mode = MwuMode::automatic,
                          Alternative alternative = Alternative::two_sided);

/// Pooled-variance two-sample t-test with n1 + n2 - 2 degrees of freedom.
TestResult independent_t(std::span<const double> a, std::span<const double> b,
                         Alternative alternative = Alternative::two_sided);

}  // namespace posyn::stats
