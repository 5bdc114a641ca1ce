#pragma once

#include "deceptlab/error.hpp"

namespace deceptlab {

// Regularized incomplete beta function I_x(a, b), continued-fraction
// evaluation, absolute accuracy ~1e-14 for moderate a, b.
double incomplete_beta(double a, double b, double x);

// Two-sided p-value of a Student-t statistic with df degrees of freedom:
// p = I_{df/(df+t^2)}(df/2, 1/2).
double student_t_two_sided_p(double t, double df);

}  // namespace deceptlab
