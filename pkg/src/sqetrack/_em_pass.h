/* One fused EM sweep for a two-component 1-D Gaussian mixture.
 *
 * Evaluates the mean log-likelihood at the given parameters and accumulates the
 * responsibility-weighted sufficient statistics for the next M-step:
 * acc = {n1, sum r1 x, sum r1 x^2, n2, sum r2 x, sum r2 x^2}.
 * Compiled with -ffast-math so exp/log vectorise; callers keep weights and
 * variances strictly positive, so no infinities reach this loop.
 */
#ifndef SQETRACK_EM_PASS_H
#define SQETRACK_EM_PASS_H

#include <math.h>

static double sqe_em_pass(const double *restrict x, long n,
                          double mu1, double mu2, double var1, double var2,
                          double w1, double w2, double *restrict acc)
{
    const double log2pi = 1.8378770664093453;
    const double c1 = log(w1) - 0.5 * (log2pi + log(var1));
    const double c2 = log(w2) - 0.5 * (log2pi + log(var2));
    const double i1 = 0.5 / var1, i2 = 0.5 / var2;
    double total = 0.0;
    double n1 = 0.0, s1 = 0.0, q1 = 0.0, n2 = 0.0, s2 = 0.0, q2 = 0.0;
    /* log(1 + e) with e in (0, 1] is summed as the log of a block product:
     * 256 factors of at most 2 stay far below overflow. */
    for (long b = 0; b < n; b += 256) {
        const long end = (n - b < 256) ? n : b + 256;
        double prod = 1.0;
        for (long i = b; i < end; i++) {
            const double xi = x[i];
            const double t1 = xi - mu1, t2 = xi - mu2;
            const double l1 = c1 - t1 * t1 * i1;
            const double l2 = c2 - t2 * t2 * i2;
            const double d = l2 - l1;
            const double e = exp(-fabs(d));
            const double inv = 1.0 / (1.0 + e);
            const double r2 = (d >= 0.0) ? inv : e * inv;
            const double r1 = (d >= 0.0) ? e * inv : inv;
            total += fmax(l1, l2);
            prod *= 1.0 + e;
            n1 += r1;
            s1 += r1 * xi;
            q1 += r1 * xi * xi;
            n2 += r2;
            s2 += r2 * xi;
            q2 += r2 * xi * xi;
        }
        total += log(prod);
    }
    acc[0] = n1; acc[1] = s1; acc[2] = q1;
    acc[3] = n2; acc[4] = s2; acc[5] = q2;
    return total / (double)n;
}

#endif
