#pragma once
// Coded packet-erasure channel over AWGN with BPSK.
//
//   p_b   = 0.5 * erfc(sqrt(10^(SNR/10)))
//   n_j   = ceil(L_j * 8 * (2 - g_j) / R)
//   PER_j = 1 - (1 - p_b)^{n_j}
//
// Units are erased independently with probability PER_j. erfc is implemented
// locally (series + continued fraction in long double) so results do not
// depend on the platform libm; tests cross-check it against a quadrature
// oracle.

#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "skillcom/core.hpp"
#include "skillcom/rng.hpp"

namespace skillcom {

namespace detail {

// Taylor series for erf, adequate for |x| < 2
inline long double erf_series(long double x) {
    long double sum = x, term = x;
    long double x2 = x * x;
    for (int n = 1; n < 200; ++n) {
        term *= -x2 / n;
        long double add = term / (2 * n + 1);
        sum += add;
        if (std::fabs(add) < std::fabs(sum) * 1e-21L) break;
    }
    return sum * 2.0L / std::sqrt(3.14159265358979323846264338327950288L);
}

// Laplace continued fraction via modified Lentz, for x >= 2:
//   erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
inline long double erfc_cf(long double x) {
    const long double tiny = 1e-300L;
    long double f = x, C = x, D = 0.0L;
    for (int n = 1; n < 4000; ++n) {
        long double a = n / 2.0L;
        D = x + a * D;
        if (std::fabs(D) < tiny) D = tiny;
        C = x + a / C;
        if (std::fabs(C) < tiny) C = tiny;
        D = 1.0L / D;
        long double delta = C * D;
        f *= delta;
        if (std::fabs(delta - 1.0L) < 1e-19L) break;
    }
    return std::exp(-x * x) / std::sqrt(3.14159265358979323846264338327950288L) / f;
}

}  // namespace detail

inline double erfc_local(double x) {
    if (x < 0.0) return 2.0 - erfc_local(-x);
    if (x < 2.0) return static_cast<double>(1.0L - detail::erf_series(x));
    return static_cast<double>(detail::erfc_cf(x));
}

// BPSK over AWGN; strictly decreasing in snr_db, range (0, 0.5] for finite SNR
inline double bit_error_rate(double snr_db) {
    if (!std::isfinite(snr_db)) throw std::invalid_argument("snr_db must be finite");
    double x = std::sqrt(std::pow(10.0, snr_db / 10.0));
    return 0.5 * erfc_local(x);
}

// n_j = ceil(L * 8 * (2 - g) / R); exact at representable integer values
inline uint64_t coded_length_bits(uint64_t byte_len, double robustness, double code_rate) {
    if (robustness < 0.0 || robustness > 1.0) throw std::invalid_argument("robustness out of [0,1]");
    if (!(code_rate > 0.0 && code_rate <= 1.0)) throw std::invalid_argument("code_rate out of (0,1]");
    if (byte_len == 0) return 0;
    long double v = static_cast<long double>(byte_len) * 8.0L *
                    (2.0L - static_cast<long double>(robustness)) /
                    static_cast<long double>(code_rate);
    long double r = std::round(v);
    if (std::fabs(v - r) < 1e-9L) return static_cast<uint64_t>(r);
    return static_cast<uint64_t>(std::ceil(v));
}

inline double per_from_ber(double p_b, uint64_t n_bits) {
    if (n_bits == 0) return 0.0;
    // 1 - (1-p)^n, computed stably
    return -std::expm1(static_cast<double>(n_bits) * std::log1p(-p_b));
}

inline double packet_erasure_prob(double snr_db, uint64_t byte_len, double robustness,
                                  double code_rate) {
    return per_from_ber(bit_error_rate(snr_db), coded_length_bits(byte_len, robustness, code_rate));
}

struct TransmissionResult {
    std::vector<SemanticUnit> delivered;      // intact units, transmit order
    std::set<uint32_t> erased_ids;
    std::map<uint32_t, double> per_unit_per;  // erasure probability used per id
};

enum class ErasureSampling {
    PacketLevel,  // one Bernoulli(PER_j) draw per unit
    BitLevel,     // n_j Bernoulli(p_b) draws, erased on any flip (cross-check mode)
};

// Independent per-unit erasure, deterministic given (units, channel, seed).
// RNG streams are keyed by unit id so the outcome does not depend on unit
// iteration order.
inline TransmissionResult transmit(const std::vector<SemanticUnit>& units,
                                   const ChannelState& channel, uint64_t seed,
                                   ErasureSampling sampling = ErasureSampling::PacketLevel) {
    channel.validate();
    validate_units(units);
    double p_b = bit_error_rate(channel.snr_db);
    TransmissionResult res;
    for (const auto& u : units) {
        uint64_t n = coded_length_bits(frame_length(u), u.robustness, channel.code_rate);
        double per = per_from_ber(p_b, n);
        res.per_unit_per[u.id] = per;
        bool erased;
        if (sampling == ErasureSampling::PacketLevel) {
            erased = rng_uniform(seed, u.id, 0) < per;
        } else {
            erased = false;
            for (uint64_t b = 0; b < n && !erased; ++b)
                erased = rng_uniform(seed, u.id, b + 1) < p_b;
        }
        if (erased)
            res.erased_ids.insert(u.id);
        else
            res.delivered.push_back(u);
    }
    return res;
}

struct ChannelValidationCell {
    double snr_db;
    uint64_t byte_len;
    double robustness;
    double code_rate;
    double analytic_per;
    double empirical_per;
    int trials;
    double z;
    bool flagged;  // |z| > 4
};

// Monte Carlo self-check of the analytic PER over a grid.
inline std::vector<ChannelValidationCell> validate_channel(
    const std::vector<double>& snr_grid, const std::vector<uint64_t>& byte_lens,
    const std::vector<double>& g_values, double code_rate, int trials, uint64_t seed) {
    if (trials < 1000) throw std::invalid_argument("validate_channel requires trials >= 1000");
    std::vector<ChannelValidationCell> report;
    uint64_t cell_idx = 0;
    for (double snr : snr_grid) {
        double p_b = bit_error_rate(snr);
        for (uint64_t len : byte_lens) {
            for (double g : g_values) {
                uint64_t n = coded_length_bits(len, g, code_rate);
                double per = per_from_ber(p_b, n);
                uint64_t cell_seed = rng_derive_seed(seed, cell_idx++);
                long erased = 0;
                for (int t = 0; t < trials; ++t)
                    if (rng_uniform(cell_seed, 0, static_cast<uint64_t>(t)) < per) ++erased;
                double emp = static_cast<double>(erased) / trials;
                double var = per * (1.0 - per);
                double z = var > 0.0
                               ? (static_cast<double>(erased) - trials * per) / std::sqrt(trials * var)
                               : 0.0;
                report.push_back({snr, len, g, code_rate, per, emp, trials, z,
                                  std::fabs(z) > 4.0});
            }
        }
    }
    return report;
}

}  // namespace skillcom
