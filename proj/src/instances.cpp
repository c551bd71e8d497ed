#include "otpr/instances.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <vector>

namespace otpr {

namespace {

constexpr std::uint64_t kStreamB = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kStreamMnist = 0xD1B54A32D192ED03ULL;
constexpr std::uint64_t kStreamMassA = 0x8BB84B93962EACC9ULL;
constexpr std::uint64_t kStreamMassB = 0x2545F4914F6CDD1DULL;

double u01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n) by rejection; portable across standard
// libraries, unlike uniform_int_distribution.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0}) % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

std::uint32_t read_be32(const unsigned char* p) {
  return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
         (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

AssignmentInstance gen_uniform_square(Index n, std::uint64_t seed) {
  if (n < 1) throw ParameterError("gen_uniform_square: n must be >= 1");

  std::mt19937_64 rng_a(splitmix64(seed));
  std::mt19937_64 rng_b(splitmix64(seed ^ kStreamB));
  std::vector<double> ax(n), ay(n), bx(n), by(n);
  for (Index i = 0; i < n; ++i) {
    ax[i] = u01(rng_a);
    ay[i] = u01(rng_a);
  }
  for (Index i = 0; i < n; ++i) {
    bx[i] = u01(rng_b);
    by[i] = u01(rng_b);
  }

  const double sqrt2 = std::sqrt(2.0);
  AssignmentInstance inst;
  inst.n_a = n;
  inst.n_b = n;
  inst.norm_factor = sqrt2;
  inst.seed = seed;
  inst.cost = Matrix<double>(n, n);
  for (Index a = 0; a < n; ++a) {
    for (Index b = 0; b < n; ++b) {
      const double dx = ax[a] - bx[b];
      const double dy = ay[a] - by[b];
      inst.cost(a, b) = std::sqrt(dx * dx + dy * dy) / sqrt2;
    }
  }
  return inst;
}

AssignmentInstance load_mnist_pair(const std::string& images_path, Index n,
                                   std::uint64_t seed) {
  if (n < 1) throw ParameterError("load_mnist_pair: n must be >= 1");

  std::ifstream in(images_path, std::ios::binary);
  if (!in) throw InputError("cannot open image file: " + images_path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 16) throw FormatError("image file too short for a header");

  const std::uint32_t magic = read_be32(bytes.data());
  if (magic != 0x00000803)
    throw FormatError("bad IDX3 magic: expected 0x00000803");
  const std::uint32_t count = read_be32(bytes.data() + 4);
  const std::uint32_t rows = read_be32(bytes.data() + 8);
  const std::uint32_t cols = read_be32(bytes.data() + 12);
  if (rows != 28 || cols != 28)
    throw FormatError("unexpected image dimensions: want 28x28");
  const std::size_t pixels = 28 * 28;
  if (bytes.size() < 16 + static_cast<std::size_t>(count) * pixels)
    throw FormatError("image file truncated");
  if (count < static_cast<std::uint32_t>(2 * n))
    throw InputError("not enough images: need " + std::to_string(2 * n) +
                     ", file has " + std::to_string(count));

  // Seeded sample of 2n distinct indices (partial Fisher-Yates).
  std::mt19937_64 rng(splitmix64(seed ^ kStreamMnist));
  std::vector<std::uint32_t> pool(count);
  for (std::uint32_t i = 0; i < count; ++i) pool[i] = i;
  const Index take = 2 * n;
  for (Index i = 0; i < take; ++i) {
    const auto j = i + bounded(rng, count - static_cast<std::uint64_t>(i));
    std::swap(pool[i], pool[j]);
  }

  // Per-image normalization to total intensity 1.
  std::vector<std::vector<double>> images(take, std::vector<double>(pixels));
  for (Index i = 0; i < take; ++i) {
    const unsigned char* src = bytes.data() + 16 + std::size_t(pool[i]) * pixels;
    double total = 0.0;
    for (std::size_t p = 0; p < pixels; ++p) total += src[p];
    if (total == 0.0)
      throw InputError("image " + std::to_string(pool[i]) +
                       " has zero total intensity");
    for (std::size_t p = 0; p < pixels; ++p)
      images[i][p] = static_cast<double>(src[p]) / total;
  }

  AssignmentInstance inst;
  inst.n_a = n;
  inst.n_b = n;
  inst.norm_factor = 2.0;
  inst.seed = seed;
  inst.cost = Matrix<double>(n, n);
  for (Index a = 0; a < n; ++a) {
    for (Index b = 0; b < n; ++b) {
      double l1 = 0.0;
      const auto& ia = images[a];
      const auto& ib = images[n + b];
      for (std::size_t p = 0; p < pixels; ++p) l1 += std::abs(ia[p] - ib[p]);
      inst.cost(a, b) = l1 / 2.0;
    }
  }
  return inst;
}

OTInstance assignment_to_ot(const AssignmentInstance& inst) {
  inst.validate();
  if (inst.n_a != inst.n_b)
    throw InputError("assignment_to_ot needs a balanced instance");
  OTInstance ot;
  ot.mu.assign(inst.n_a, 1.0 / static_cast<double>(inst.n_a));
  ot.nu.assign(inst.n_b, 1.0 / static_cast<double>(inst.n_b));
  ot.cost = inst.cost;
  ot.norm_factor = inst.norm_factor;
  ot.seed = inst.seed;
  return ot;
}

OTInstance gen_random_ot_rational(Index n_a, Index n_b, std::uint64_t seed) {
  if (n_a < 1 || n_b < 1)
    throw ParameterError("gen_random_ot_rational: sides must be >= 1");

  std::mt19937_64 rng_ma(splitmix64(seed ^ kStreamMassA));
  std::mt19937_64 rng_mb(splitmix64(seed ^ kStreamMassB));
  std::mt19937_64 rng_c(splitmix64(seed));

  std::vector<std::int64_t> wa(n_a), wb(n_b);
  std::int64_t ta = 0, tb = 0;
  for (auto& w : wa) {
    w = static_cast<std::int64_t>(bounded(rng_ma, 50)) + 1;
    ta += w;
  }
  for (auto& w : wb) {
    w = static_cast<std::int64_t>(bounded(rng_mb, 50)) + 1;
    tb += w;
  }

  OTInstance ot;
  ot.seed = seed;
  ot.mu.resize(n_a);
  ot.nu.resize(n_b);
  for (Index a = 0; a < n_a; ++a)
    ot.mu[a] = static_cast<double>(wa[a]) / static_cast<double>(ta);
  for (Index b = 0; b < n_b; ++b)
    ot.nu[b] = static_cast<double>(wb[b]) / static_cast<double>(tb);
  ot.cost = Matrix<double>(n_a, n_b);
  for (Index a = 0; a < n_a; ++a)
    for (Index b = 0; b < n_b; ++b) ot.cost(a, b) = u01(rng_c);
  ot.renormalize();
  return ot;
}

namespace {

constexpr char kCacheMagic[8] = {'O', 'T', 'P', 'R', 'I', 'N', 'S', '1'};

template <typename T>
void put(std::ofstream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
void get(std::ifstream& in, T& value) {
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
}

}  // namespace

void save_instance(const AssignmentInstance& inst, const std::string& path) {
  inst.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot open for writing: " + path);
  out.write(kCacheMagic, sizeof(kCacheMagic));
  put(out, static_cast<std::uint32_t>(inst.n_a));
  put(out, static_cast<std::uint32_t>(inst.n_b));
  put(out, inst.norm_factor);
  put(out, inst.seed);
  out.write(reinterpret_cast<const char*>(inst.cost.data()),
            static_cast<std::streamsize>(inst.cost.size() * sizeof(double)));
  if (!out) throw InputError("write failed: " + path);
}

AssignmentInstance load_instance(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open instance file: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCacheMagic, sizeof(magic)) != 0)
    throw FormatError("not an instance cache file: " + path);

  std::uint32_t n_a = 0, n_b = 0;
  AssignmentInstance inst;
  get(in, n_a);
  get(in, n_b);
  get(in, inst.norm_factor);
  get(in, inst.seed);
  if (!in || n_a == 0 || n_b == 0)
    throw FormatError("corrupt instance header: " + path);
  inst.n_a = static_cast<Index>(n_a);
  inst.n_b = static_cast<Index>(n_b);
  inst.cost = Matrix<double>(inst.n_a, inst.n_b);
  in.read(reinterpret_cast<char*>(inst.cost.data()),
          static_cast<std::streamsize>(inst.cost.size() * sizeof(double)));
  if (!in) throw FormatError("instance payload truncated: " + path);
  return inst;
}

}  // namespace otpr
