#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace fedchain::ckks {

struct ParamError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct CapacityError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct RangeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct AlignmentError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct DepthError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Scheme parameters. Moduli must be NTT-friendly for the chosen ring
/// dimension (prime, ≡ 1 mod 2·ring_dim).
struct CkksParams {
    std::size_t ring_dim = 8192;
    std::vector<std::uint64_t> modulus_chain;
    double scale = 0x1p40;
    double error_stddev = 3.2;

    std::size_t slot_count() const { return ring_dim / 2; }
    void validate() const;
};

/// Named presets: "paper" (ring_dim 8192) and "test" / "test-<N>" for
/// millisecond-scale property tests.
CkksParams make_params(std::size_t ring_dim, std::size_t chain_len = 3,
                       double scale = 0x1p40);
CkksParams preset_params(const std::string& name);

/// Deterministic search for the smallest prime above 2^bit_size that is
/// ≡ 1 mod 2·ring_dim, skipping any already taken.
std::uint64_t find_ntt_prime(std::size_t ring_dim, unsigned bit_size,
                             const std::vector<std::uint64_t>& taken);

/// Polynomial in RNS form: residues[j][i] is coefficient i modulo chain
/// prime j. The number of residue rows equals the active chain prefix.
struct PolyRns {
    std::size_t ring_dim = 0;
    std::vector<std::vector<std::uint64_t>> residues;

    static PolyRns zero(std::size_t ring_dim, std::size_t chain_len);
    bool operator==(const PolyRns&) const = default;
};

struct Plaintext {
    PolyRns poly;
    std::size_t level = 0;  // index of the last active chain prime
    double scale = 0;
};

struct Ciphertext {
    PolyRns c0, c1;
    std::size_t level = 0;
    double scale = 0;
};

struct PublicKey {
    PolyRns b, a;  // b = -a·s + e
};

struct KeyPair {
    PublicKey public_key;
    PolyRns secret_key;  // ternary coefficients
};

KeyPair keygen(const CkksParams& params, std::uint64_t seed);

/// Packs up to ring_dim/2 reals into plaintext slots at the given level.
/// `scale` overrides params.scale when nonzero (used to match ciphertext
/// scales after rescaling).
Plaintext encode(const std::vector<double>& values, const CkksParams& params,
                 std::size_t level, double scale = 0);
std::vector<double> decode(const Plaintext& pt, const CkksParams& params,
                           std::size_t count);

Ciphertext encrypt(const Plaintext& pt, const PublicKey& pk,
                   const CkksParams& params, std::uint64_t seed);
Plaintext decrypt(const Ciphertext& ct, const PolyRns& sk,
                  const CkksParams& params);

Ciphertext add(const Ciphertext& a, const Ciphertext& b,
               const CkksParams& params);
Ciphertext add_plain(const Ciphertext& a, const Plaintext& p,
                     const CkksParams& params);
/// Un-rescaled product: result scale = a.scale × p.scale.
Ciphertext mul_plain(const Ciphertext& a, const Plaintext& p,
                     const CkksParams& params);
/// Drops the last active chain prime; scale divides by it.
Ciphertext rescale(const Ciphertext& a, const CkksParams& params);

/// Binary serialization ("CKKS" magic, version byte, params header,
/// little-endian residue arrays). Bit-exact across runs.
std::vector<std::uint8_t> serialize(const Ciphertext& ct);
Ciphertext deserialize_ciphertext(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> serialize(const KeyPair& kp);
KeyPair deserialize_keypair(const std::vector<std::uint8_t>& bytes);

// Negacyclic NTT over one chain prime; exposed for the correctness suite.
namespace detail {
void ntt_forward(std::vector<std::uint64_t>& coeffs, std::uint64_t modulus);
void ntt_inverse(std::vector<std::uint64_t>& coeffs, std::uint64_t modulus);
}  // namespace detail

}  // namespace fedchain::ckks
