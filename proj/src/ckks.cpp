#include "fedchain/ckks.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <map>
#include <mutex>
#include <bit>
#include <numbers>

#include "fedchain/rng.hpp"

namespace fedchain::ckks {

namespace {

using u64 = std::uint64_t;
using u128 = unsigned __int128;
using i128 = __int128;

u64 mulmod(u64 a, u64 b, u64 q) {
    return static_cast<u64>(static_cast<u128>(a) * b % q);
}

u64 addmod(u64 a, u64 b, u64 q) {
    u64 s = a + b;
    return s >= q ? s - q : s;
}

u64 submod(u64 a, u64 b, u64 q) { return a >= b ? a - b : a + q - b; }

u64 powmod(u64 base, u64 exp, u64 q) {
    u64 r = 1;
    base %= q;
    while (exp) {
        if (exp & 1) r = mulmod(r, base, q);
        base = mulmod(base, base, q);
        exp >>= 1;
    }
    return r;
}

u64 invmod(u64 a, u64 q) { return powmod(a, q - 2, q); }  // q prime

bool is_prime(u64 n) {
    if (n < 2) return false;
    for (u64 p : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL, 23ULL,
                  29ULL, 31ULL, 37ULL}) {
        if (n % p == 0) return n == p;
    }
    u64 d = n - 1;
    int r = 0;
    while ((d & 1) == 0) {
        d >>= 1;
        ++r;
    }
    // deterministic Miller-Rabin bases for 64-bit integers
    for (u64 a : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL, 23ULL,
                  29ULL, 31ULL, 37ULL}) {
        u64 x = powmod(a, d, n);
        if (x == 1 || x == n - 1) continue;
        bool composite = true;
        for (int i = 0; i < r - 1; ++i) {
            x = mulmod(x, x, n);
            if (x == n - 1) {
                composite = false;
                break;
            }
        }
        if (composite) return false;
    }
    return true;
}

// Primitive 2n-th root of unity mod q (q ≡ 1 mod 2n).
u64 find_primitive_root(u64 q, std::size_t two_n) {
    const u64 cofactor = (q - 1) / two_n;
    for (u64 g = 2;; ++g) {
        u64 cand = powmod(g, cofactor, q);
        if (powmod(cand, two_n / 2, q) == q - 1) return cand;
    }
}

std::size_t bit_reverse(std::size_t x, unsigned bits) {
    std::size_t r = 0;
    for (unsigned i = 0; i < bits; ++i) {
        r = (r << 1) | (x & 1);
        x >>= 1;
    }
    return r;
}

struct NttTables {
    std::vector<u64> psi_rev;      // psi^bitrev(i)
    std::vector<u64> psi_inv_rev;  // psi^-bitrev(i)
    u64 n_inv;
};

const NttTables& ntt_tables(u64 q, std::size_t n) {
    static std::map<std::pair<u64, std::size_t>, NttTables> cache;
    static std::mutex mtx;
    std::lock_guard lock(mtx);
    auto it = cache.find({q, n});
    if (it != cache.end()) return it->second;

    NttTables t;
    const unsigned bits = static_cast<unsigned>(std::countr_zero(n));
    const u64 psi = find_primitive_root(q, 2 * n);
    const u64 psi_inv = invmod(psi, q);
    t.psi_rev.resize(n);
    t.psi_inv_rev.resize(n);
    u64 p = 1, pi = 1;
    std::vector<u64> pw(n), pwi(n);
    for (std::size_t i = 0; i < n; ++i) {
        pw[i] = p;
        pwi[i] = pi;
        p = mulmod(p, psi, q);
        pi = mulmod(pi, psi_inv, q);
    }
    for (std::size_t i = 0; i < n; ++i) {
        t.psi_rev[i] = pw[bit_reverse(i, bits)];
        t.psi_inv_rev[i] = pwi[bit_reverse(i, bits)];
    }
    t.n_inv = invmod(n, q);
    return cache.emplace(std::make_pair(q, n), std::move(t)).first->second;
}

void ntt_fwd(std::vector<u64>& a, u64 q) {
    const std::size_t n = a.size();
    const auto& tab = ntt_tables(q, n);
    std::size_t t = n;
    for (std::size_t m = 1; m < n; m <<= 1) {
        t >>= 1;
        for (std::size_t i = 0; i < m; ++i) {
            const std::size_t j1 = 2 * i * t;
            const u64 s = tab.psi_rev[m + i];
            for (std::size_t j = j1; j < j1 + t; ++j) {
                const u64 u = a[j];
                const u64 v = mulmod(a[j + t], s, q);
                a[j] = addmod(u, v, q);
                a[j + t] = submod(u, v, q);
            }
        }
    }
}

void ntt_inv(std::vector<u64>& a, u64 q) {
    const std::size_t n = a.size();
    const auto& tab = ntt_tables(q, n);
    std::size_t t = 1;
    for (std::size_t m = n; m > 1; m >>= 1) {
        std::size_t j1 = 0;
        const std::size_t h = m >> 1;
        for (std::size_t i = 0; i < h; ++i) {
            const u64 s = tab.psi_inv_rev[h + i];
            for (std::size_t j = j1; j < j1 + t; ++j) {
                const u64 u = a[j];
                const u64 v = a[j + t];
                a[j] = addmod(u, v, q);
                a[j + t] = mulmod(submod(u, v, q), s, q);
            }
            j1 += 2 * t;
        }
        t <<= 1;
    }
    for (auto& x : a) x = mulmod(x, tab.n_inv, q);
}

std::size_t active_len(std::size_t level) { return level + 1; }

PolyRns poly_add(const PolyRns& a, const PolyRns& b,
                 const std::vector<u64>& chain) {
    PolyRns r = a;
    for (std::size_t j = 0; j < r.residues.size(); ++j) {
        const u64 q = chain[j];
        for (std::size_t i = 0; i < r.ring_dim; ++i)
            r.residues[j][i] = addmod(r.residues[j][i], b.residues[j][i], q);
    }
    return r;
}

// Negacyclic product via per-modulus NTT.
PolyRns poly_mul(const PolyRns& a, const PolyRns& b,
                 const std::vector<u64>& chain) {
    PolyRns r = a;
    for (std::size_t j = 0; j < r.residues.size(); ++j) {
        const u64 q = chain[j];
        std::vector<u64> fa = a.residues[j];
        std::vector<u64> fb = b.residues[j];
        ntt_fwd(fa, q);
        ntt_fwd(fb, q);
        for (std::size_t i = 0; i < fa.size(); ++i)
            fa[i] = mulmod(fa[i], fb[i], q);
        ntt_inv(fa, q);
        r.residues[j] = std::move(fa);
    }
    return r;
}

// Small signed integers reduced into every active modulus.
PolyRns poly_from_signed(const std::vector<i128>& coeffs,
                         const std::vector<u64>& chain, std::size_t levels) {
    PolyRns r = PolyRns::zero(coeffs.size(), levels);
    for (std::size_t j = 0; j < levels; ++j) {
        const u64 q = chain[j];
        for (std::size_t i = 0; i < coeffs.size(); ++i) {
            i128 c = coeffs[i] % static_cast<i128>(q);
            if (c < 0) c += q;
            r.residues[j][i] = static_cast<u64>(c);
        }
    }
    return r;
}

// Embedding transforms over the multiplicative group generated by 5
// (slot index i evaluates at ζ^{5^i mod 2N}).
struct EmbTables {
    std::vector<std::complex<double>> ksi;  // ζ^j, j < 2N
    std::vector<std::size_t> rot_group;     // 5^i mod 2N, i < N/2
};

const EmbTables& emb_tables(std::size_t ring_dim) {
    static std::map<std::size_t, EmbTables> cache;
    static std::mutex mtx;
    std::lock_guard lock(mtx);
    auto it = cache.find(ring_dim);
    if (it != cache.end()) return it->second;
    EmbTables t;
    const std::size_t m = 2 * ring_dim;
    t.ksi.resize(m);
    for (std::size_t j = 0; j < m; ++j) {
        const double ang = 2.0 * std::numbers::pi * static_cast<double>(j) /
                           static_cast<double>(m);
        t.ksi[j] = {std::cos(ang), std::sin(ang)};
    }
    t.rot_group.resize(ring_dim / 2);
    std::size_t five = 1;
    for (std::size_t i = 0; i < ring_dim / 2; ++i) {
        t.rot_group[i] = five;
        five = five * 5 % m;
    }
    return cache.emplace(ring_dim, std::move(t)).first->second;
}

void array_bit_reverse(std::vector<std::complex<double>>& v) {
    const unsigned bits = static_cast<unsigned>(std::countr_zero(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
        const std::size_t j = bit_reverse(i, bits);
        if (i < j) std::swap(v[i], v[j]);
    }
}

// Slot values -> embedding coefficients (inverse special FFT).
void emb_inverse(std::vector<std::complex<double>>& vals,
                 std::size_t ring_dim) {
    const auto& t = emb_tables(ring_dim);
    const std::size_t n = vals.size();
    const std::size_t m = 2 * ring_dim;
    for (std::size_t len = n; len >= 1; len >>= 1) {
        for (std::size_t i = 0; i < n; i += len) {
            const std::size_t lenh = len >> 1;
            const std::size_t lenq = len << 2;
            const std::size_t gap = m / lenq;
            for (std::size_t j = 0; j < lenh; ++j) {
                const std::size_t idx =
                    (lenq - t.rot_group[j] % lenq) * gap;
                const auto u = vals[i + j] + vals[i + j + lenh];
                auto v = vals[i + j] - vals[i + j + lenh];
                v *= t.ksi[idx];
                vals[i + j] = u;
                vals[i + j + lenh] = v;
            }
        }
        if (len == 1) break;
    }
    array_bit_reverse(vals);
    for (auto& v : vals) v /= static_cast<double>(n);
}

// Embedding coefficients -> slot values (forward special FFT).
void emb_forward(std::vector<std::complex<double>>& vals,
                 std::size_t ring_dim) {
    const auto& t = emb_tables(ring_dim);
    const std::size_t n = vals.size();
    const std::size_t m = 2 * ring_dim;
    array_bit_reverse(vals);
    for (std::size_t len = 2; len <= n; len <<= 1) {
        for (std::size_t i = 0; i < n; i += len) {
            const std::size_t lenh = len >> 1;
            const std::size_t lenq = len << 2;
            const std::size_t gap = m / lenq;
            for (std::size_t j = 0; j < lenh; ++j) {
                const std::size_t idx = t.rot_group[j] % lenq * gap;
                const auto u = vals[i + j];
                auto v = vals[i + j + lenh];
                v *= t.ksi[idx];
                vals[i + j] = u + v;
                vals[i + j + lenh] = u - v;
            }
        }
    }
}

void check_aligned(const Ciphertext& a, std::size_t level, double scale,
                   const char* what) {
    if (a.level != level)
        throw AlignmentError(std::string(what) + ": level mismatch");
    const double rel = std::abs(a.scale - scale) / std::max(a.scale, scale);
    if (rel > 1e-9)
        throw AlignmentError(std::string(what) + ": scale mismatch");
}

// Centered coefficient lift from the first one or two active residues.
// Valid while |coefficient| < q0/2 (one prime) or q0·q1/2 (two).
i128 lift_centered(const PolyRns& p, std::size_t i,
                   const std::vector<u64>& chain) {
    const u64 q0 = chain[0];
    if (p.residues.size() == 1) {
        i128 v = p.residues[0][i];
        if (v > static_cast<i128>(q0 / 2)) v -= q0;
        return v;
    }
    const u64 q1 = chain[1];
    const u64 r0 = p.residues[0][i];
    const u64 r1 = p.residues[1][i];
    const u64 d = mulmod(submod(r1, r0 % q1, q1), invmod(q0 % q1, q1), q1);
    i128 x = static_cast<i128>(r0) + static_cast<i128>(q0) * d;
    const i128 q01 = static_cast<i128>(q0) * q1;
    if (x > q01 / 2) x -= q01;
    return x;
}

}  // namespace

void CkksParams::validate() const {
    if (ring_dim < 16 || (ring_dim & (ring_dim - 1)) != 0)
        throw ParamError("ring_dim must be a power of two >= 16");
    if (modulus_chain.empty()) throw ParamError("empty modulus chain");
    for (u64 q : modulus_chain) {
        if (!is_prime(q) || q % (2 * ring_dim) != 1)
            throw ParamError("modulus " + std::to_string(q) +
                             " is not NTT-friendly for ring_dim " +
                             std::to_string(ring_dim));
    }
    std::vector<u64> sorted = modulus_chain;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw ParamError("modulus chain primes must be distinct");
    if (scale <= 0 || scale >= static_cast<double>(sorted.front()))
        throw ParamError("scale must be positive and below every modulus");
    if (error_stddev <= 0) throw ParamError("error_stddev must be positive");
}

std::uint64_t find_ntt_prime(std::size_t ring_dim, unsigned bit_size,
                             const std::vector<std::uint64_t>& taken) {
    const u64 step = 2 * static_cast<u64>(ring_dim);
    u64 cand = (1ULL << bit_size) + 1;  // already ≡ 1 mod 2N
    for (; cand < (1ULL << (bit_size + 1)); cand += step) {
        if (is_prime(cand) &&
            std::find(taken.begin(), taken.end(), cand) == taken.end())
            return cand;
    }
    throw ParamError("no NTT-friendly prime found");
}

CkksParams make_params(std::size_t ring_dim, std::size_t chain_len,
                       double scale) {
    CkksParams p;
    p.ring_dim = ring_dim;
    p.scale = scale;
    // first prime ~2^50 absorbs message growth; the rest track the scale
    std::vector<u64> chain;
    chain.push_back(find_ntt_prime(ring_dim, 50, chain));
    while (chain.size() < chain_len)
        chain.push_back(find_ntt_prime(ring_dim, 40, chain));
    p.modulus_chain = std::move(chain);
    p.validate();
    return p;
}

CkksParams preset_params(const std::string& name) {
    if (name == "paper") return make_params(8192);
    if (name == "test") return make_params(1024);
    if (name.rfind("test-", 0) == 0)
        return make_params(std::stoul(name.substr(5)));
    throw ParamError("unknown CKKS preset: " + name);
}

PolyRns PolyRns::zero(std::size_t ring_dim, std::size_t chain_len) {
    PolyRns p;
    p.ring_dim = ring_dim;
    p.residues.assign(chain_len, std::vector<u64>(ring_dim, 0));
    return p;
}

KeyPair keygen(const CkksParams& params, std::uint64_t seed) {
    params.validate();
    const std::size_t n = params.ring_dim;
    const std::size_t chain_len = params.modulus_chain.size();
    Rng rng = Rng(seed).fork(0x6b657967);  // "keyg"

    std::vector<i128> s_coeffs(n), e_coeffs(n);
    for (auto& c : s_coeffs) c = rng.ternary();
    for (auto& c : e_coeffs)
        c = std::llround(rng.gaussian(params.error_stddev));

    KeyPair kp;
    kp.secret_key = poly_from_signed(s_coeffs, params.modulus_chain, chain_len);

    PolyRns a = PolyRns::zero(n, chain_len);
    for (std::size_t j = 0; j < chain_len; ++j)
        for (std::size_t i = 0; i < n; ++i)
            a.residues[j][i] = rng.next_below(params.modulus_chain[j]);

    // b = -a·s + e
    PolyRns as = poly_mul(a, kp.secret_key, params.modulus_chain);
    PolyRns b = poly_from_signed(e_coeffs, params.modulus_chain, chain_len);
    for (std::size_t j = 0; j < chain_len; ++j) {
        const u64 q = params.modulus_chain[j];
        for (std::size_t i = 0; i < n; ++i)
            b.residues[j][i] =
                submod(b.residues[j][i], as.residues[j][i], q);
    }
    kp.public_key = {std::move(b), std::move(a)};
    return kp;
}

Plaintext encode(const std::vector<double>& values, const CkksParams& params,
                 std::size_t level, double scale) {
    const std::size_t slots = params.slot_count();
    if (values.size() > slots)
        throw CapacityError("encode: " + std::to_string(values.size()) +
                            " values exceed " + std::to_string(slots) +
                            " slots");
    if (level >= params.modulus_chain.size())
        throw ParamError("encode: level out of chain");
    if (scale == 0) scale = params.scale;

    std::vector<std::complex<double>> vals(slots, {0.0, 0.0});
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i]))
            throw RangeError("encode: non-finite input");
        vals[i] = {values[i], 0.0};
    }
    emb_inverse(vals, params.ring_dim);

    const double limit = static_cast<double>(params.modulus_chain[0]) / 2.0;
    std::vector<i128> coeffs(params.ring_dim);
    for (std::size_t i = 0; i < slots; ++i) {
        const double re = vals[i].real() * scale;
        const double im = vals[i].imag() * scale;
        if (std::abs(re) >= limit || std::abs(im) >= limit)
            throw RangeError("encode: scaled magnitude overflows modulus");
        coeffs[i] = static_cast<i128>(std::llround(re));
        coeffs[i + slots] = static_cast<i128>(std::llround(im));
    }
    Plaintext pt;
    pt.poly = poly_from_signed(coeffs, params.modulus_chain, active_len(level));
    pt.level = level;
    pt.scale = scale;
    return pt;
}

std::vector<double> decode(const Plaintext& pt, const CkksParams& params,
                           std::size_t count) {
    const std::size_t slots = params.slot_count();
    if (count > slots) throw CapacityError("decode: count exceeds slots");
    std::vector<std::complex<double>> vals(slots);
    for (std::size_t i = 0; i < slots; ++i) {
        const double re = static_cast<double>(
            lift_centered(pt.poly, i, params.modulus_chain));
        const double im = static_cast<double>(
            lift_centered(pt.poly, i + slots, params.modulus_chain));
        vals[i] = {re / pt.scale, im / pt.scale};
    }
    emb_forward(vals, params.ring_dim);
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i) out[i] = vals[i].real();
    return out;
}

Ciphertext encrypt(const Plaintext& pt, const PublicKey& pk,
                   const CkksParams& params, std::uint64_t seed) {
    const std::size_t n = params.ring_dim;
    const std::size_t levels = active_len(pt.level);
    Rng rng = Rng(seed).fork(0x656e6372);  // "encr"

    std::vector<i128> u_coeffs(n), e0_coeffs(n), e1_coeffs(n);
    for (auto& c : u_coeffs) c = rng.ternary();
    for (auto& c : e0_coeffs)
        c = std::llround(rng.gaussian(params.error_stddev));
    for (auto& c : e1_coeffs)
        c = std::llround(rng.gaussian(params.error_stddev));

    auto truncate = [&](const PolyRns& p) {
        PolyRns r = p;
        r.residues.resize(levels);
        return r;
    };
    const PolyRns u = poly_from_signed(u_coeffs, params.modulus_chain, levels);
    const PolyRns b = truncate(pk.b);
    const PolyRns a = truncate(pk.a);

    Ciphertext ct;
    ct.c0 = poly_add(
        poly_add(poly_mul(b, u, params.modulus_chain),
                 poly_from_signed(e0_coeffs, params.modulus_chain, levels),
                 params.modulus_chain),
        pt.poly, params.modulus_chain);
    ct.c1 = poly_add(poly_mul(a, u, params.modulus_chain),
                     poly_from_signed(e1_coeffs, params.modulus_chain, levels),
                     params.modulus_chain);
    ct.level = pt.level;
    ct.scale = pt.scale;
    return ct;
}

Plaintext decrypt(const Ciphertext& ct, const PolyRns& sk,
                  const CkksParams& params) {
    PolyRns s = sk;
    s.residues.resize(active_len(ct.level));
    Plaintext pt;
    pt.poly = poly_add(ct.c0, poly_mul(ct.c1, s, params.modulus_chain),
                       params.modulus_chain);
    pt.level = ct.level;
    pt.scale = ct.scale;
    return pt;
}

Ciphertext add(const Ciphertext& a, const Ciphertext& b,
               const CkksParams& params) {
    check_aligned(b, a.level, a.scale, "add");
    Ciphertext r;
    r.c0 = poly_add(a.c0, b.c0, params.modulus_chain);
    r.c1 = poly_add(a.c1, b.c1, params.modulus_chain);
    r.level = a.level;
    r.scale = a.scale;
    return r;
}

Ciphertext add_plain(const Ciphertext& a, const Plaintext& p,
                     const CkksParams& params) {
    if (p.level != a.level) throw AlignmentError("add_plain: level mismatch");
    const double rel = std::abs(a.scale - p.scale) / std::max(a.scale, p.scale);
    if (rel > 1e-9) throw AlignmentError("add_plain: scale mismatch");
    Ciphertext r = a;
    r.c0 = poly_add(a.c0, p.poly, params.modulus_chain);
    return r;
}

Ciphertext mul_plain(const Ciphertext& a, const Plaintext& p,
                     const CkksParams& params) {
    if (p.level != a.level) throw AlignmentError("mul_plain: level mismatch");
    double log_q = 0;
    for (std::size_t j = 0; j <= a.level; ++j)
        log_q += std::log2(static_cast<double>(params.modulus_chain[j]));
    if (std::log2(a.scale) + std::log2(p.scale) > log_q - 2)
        throw RangeError("mul_plain: product scale overflows active modulus");
    Ciphertext r;
    r.c0 = poly_mul(a.c0, p.poly, params.modulus_chain);
    r.c1 = poly_mul(a.c1, p.poly, params.modulus_chain);
    r.level = a.level;
    r.scale = a.scale * p.scale;
    return r;
}

Ciphertext rescale(const Ciphertext& a, const CkksParams& params) {
    if (a.level == 0) throw DepthError("rescale: modulus chain exhausted");
    const u64 ql = params.modulus_chain[a.level];
    const std::size_t new_levels = a.level;

    auto rescale_poly = [&](const PolyRns& p) {
        PolyRns r = PolyRns::zero(p.ring_dim, new_levels);
        for (std::size_t j = 0; j < new_levels; ++j) {
            const u64 q = params.modulus_chain[j];
            const u64 ql_inv = invmod(ql % q, q);
            for (std::size_t i = 0; i < p.ring_dim; ++i) {
                // centered residue of the dropped prime
                u64 rl = p.residues[new_levels][i];
                i128 c = rl;
                if (c > static_cast<i128>(ql / 2)) c -= ql;
                i128 v = static_cast<i128>(p.residues[j][i]) -
                         c % static_cast<i128>(q);
                v %= static_cast<i128>(q);
                if (v < 0) v += q;
                r.residues[j][i] = mulmod(static_cast<u64>(v), ql_inv, q);
            }
        }
        return r;
    };
    Ciphertext r;
    r.c0 = rescale_poly(a.c0);
    r.c1 = rescale_poly(a.c1);
    r.level = a.level - 1;
    r.scale = a.scale / static_cast<double>(ql);
    return r;
}

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back((v >> (8 * i)) & 0xff);
}
void put_u64(std::vector<std::uint8_t>& out, u64 v) {
    for (int i = 0; i < 8; ++i) out.push_back((v >> (8 * i)) & 0xff);
}
void put_f64(std::vector<std::uint8_t>& out, double v) {
    u64 bits;
    std::memcpy(&bits, &v, 8);
    put_u64(out, bits);
}
void put_poly(std::vector<std::uint8_t>& out, const PolyRns& p) {
    put_u32(out, static_cast<std::uint32_t>(p.residues.size()));
    for (const auto& row : p.residues)
        for (u64 v : row) put_u64(out, v);
}

struct Reader {
    const std::vector<std::uint8_t>& buf;
    std::size_t pos = 0;
    std::uint8_t u8() {
        if (pos >= buf.size()) throw std::runtime_error("CKKS blob truncated");
        return buf[pos++];
    }
    std::uint32_t u32() {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
        return v;
    }
    u64 u64v() {
        u64 v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<u64>(u8()) << (8 * i);
        return v;
    }
    double f64() {
        u64 bits = u64v();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    PolyRns poly(std::size_t ring_dim) {
        PolyRns p;
        p.ring_dim = ring_dim;
        p.residues.resize(u32());
        for (auto& row : p.residues) {
            row.resize(ring_dim);
            for (auto& v : row) v = u64v();
        }
        return p;
    }
};

constexpr std::uint8_t kVersion = 1;
constexpr std::uint8_t kKindCiphertext = 1;
constexpr std::uint8_t kKindKeyPair = 2;

void put_header(std::vector<std::uint8_t>& out, std::uint8_t kind,
                std::size_t ring_dim) {
    out.insert(out.end(), {'C', 'K', 'K', 'S'});
    out.push_back(kVersion);
    out.push_back(kind);
    put_u32(out, static_cast<std::uint32_t>(ring_dim));
}

std::size_t read_header(Reader& r, std::uint8_t expect_kind) {
    if (r.u8() != 'C' || r.u8() != 'K' || r.u8() != 'K' || r.u8() != 'S')
        throw std::runtime_error("bad CKKS magic");
    if (r.u8() != kVersion) throw std::runtime_error("bad CKKS version");
    if (r.u8() != expect_kind) throw std::runtime_error("bad CKKS blob kind");
    return r.u32();
}

}  // namespace

std::vector<std::uint8_t> serialize(const Ciphertext& ct) {
    std::vector<std::uint8_t> out;
    put_header(out, kKindCiphertext, ct.c0.ring_dim);
    put_u32(out, static_cast<std::uint32_t>(ct.level));
    put_f64(out, ct.scale);
    put_poly(out, ct.c0);
    put_poly(out, ct.c1);
    return out;
}

Ciphertext deserialize_ciphertext(const std::vector<std::uint8_t>& bytes) {
    Reader r{bytes};
    const std::size_t n = read_header(r, kKindCiphertext);
    Ciphertext ct;
    ct.level = r.u32();
    ct.scale = r.f64();
    ct.c0 = r.poly(n);
    ct.c1 = r.poly(n);
    return ct;
}

std::vector<std::uint8_t> serialize(const KeyPair& kp) {
    std::vector<std::uint8_t> out;
    put_header(out, kKindKeyPair, kp.secret_key.ring_dim);
    put_poly(out, kp.secret_key);
    put_poly(out, kp.public_key.b);
    put_poly(out, kp.public_key.a);
    return out;
}

KeyPair deserialize_keypair(const std::vector<std::uint8_t>& bytes) {
    Reader r{bytes};
    const std::size_t n = read_header(r, kKindKeyPair);
    KeyPair kp;
    kp.secret_key = r.poly(n);
    kp.public_key.b = r.poly(n);
    kp.public_key.a = r.poly(n);
    return kp;
}

namespace detail {
void ntt_forward(std::vector<std::uint64_t>& coeffs, std::uint64_t modulus) {
    ntt_fwd(coeffs, modulus);
}
void ntt_inverse(std::vector<std::uint64_t>& coeffs, std::uint64_t modulus) {
    ntt_inv(coeffs, modulus);
}
}  // namespace detail

}  // namespace fedchain::ckks
