#include "model.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <numeric>

namespace bsr {

void ModelParams::validate() const {
  if (block_len < 1) throw std::invalid_argument("model params: d >= 1 required");
  if (block_count < 1) throw std::invalid_argument("model params: N >= 1 required");
  if (sparsity < 1 || sparsity > block_count)
    throw std::invalid_argument("model params: 1 <= N_a <= N required");
  if (measurements >= block_count * block_len)
    throw std::invalid_argument("model params: M < N*d required (compressed regime)");
  if (measurements <= sparsity * block_len)
    throw std::invalid_argument("model params: M > N_a*d required (recoverable regime)");
  if (noise_var < 0.0) throw std::invalid_argument("model params: sigma2 >= 0 required");
}

ProblemInstance generate_instance(const ModelParams& params, Rng& rng) {
  params.validate();
  const std::size_t n = params.block_count;
  const std::size_t d = params.block_len;
  const std::size_t m = params.measurements;

  ProblemInstance inst;
  inst.params = params;
  inst.sensing = ComplexMatrix(m, n * d);
  const double bvar = 1.0 / static_cast<double>(m);
  for (cxd& e : inst.sensing.entries()) e = rng.complex_gaussian(bvar);

  // Fisher-Yates partial shuffle for a uniform support draw.
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t i = 0; i < params.sparsity; ++i)
    std::swap(pool[i], pool[i + rng.below(n - i)]);
  inst.support.assign(pool.begin(), pool.begin() + params.sparsity);
  std::sort(inst.support.begin(), inst.support.end());

  inst.signal.assign(n * d, cxd{});
  for (std::size_t blk : inst.support)
    for (std::size_t i = 0; i < d; ++i) inst.signal[blk * d + i] = rng.complex_gaussian(1.0);

  inst.noise.assign(m, cxd{});
  if (params.noise_var > 0.0)
    for (cxd& z : inst.noise) z = rng.complex_gaussian(params.noise_var);

  inst.observation = inst.sensing.multiply(inst.signal);
  for (std::size_t r = 0; r < m; ++r) inst.observation[r] += inst.noise[r];
  return inst;
}

ProblemInstance generate_instance(const ModelParams& params) {
  Rng rng(params.seed);
  return generate_instance(params, rng);
}

ComplexMatrix block_columns(const ComplexMatrix& b, std::size_t index, std::size_t block_len) {
  if ((index + 1) * block_len > b.cols()) throw std::out_of_range("block index out of range");
  return b.columns(index * block_len, block_len);
}

namespace {

constexpr char kMagic[4] = {'B', 'S', 'R', 'I'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}

void put_cvec(std::ostream& os, const cvec& v) {
  for (const cxd& x : v) {
    put(os, x.real());
    put(os, x.imag());
  }
}

void get_cvec(std::istream& is, std::span<cxd> v) {
  for (cxd& x : v) {
    const double re = get<double>(is);
    const double im = get<double>(is);
    x = {re, im};
  }
}

}  // namespace

void save_instance(const ProblemInstance& inst, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os.write(kMagic, sizeof(kMagic));
  put(os, kVersion);
  put(os, static_cast<std::uint64_t>(inst.params.block_count));
  put(os, static_cast<std::uint64_t>(inst.params.block_len));
  put(os, static_cast<std::uint64_t>(inst.params.measurements));
  put(os, static_cast<std::uint64_t>(inst.params.sparsity));
  put(os, inst.params.noise_var);
  put(os, inst.params.seed);
  for (std::size_t s : inst.support) put(os, static_cast<std::uint64_t>(s));
  put_cvec(os, cvec(inst.sensing.entries().begin(), inst.sensing.entries().end()));
  put_cvec(os, inst.signal);
  put_cvec(os, inst.noise);
  put_cvec(os, inst.observation);
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

ProblemInstance load_instance(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("not an instance file: " + path.string());
  if (get<std::uint32_t>(is) != kVersion) throw std::runtime_error("unsupported instance version");

  ProblemInstance inst;
  inst.params.block_count = get<std::uint64_t>(is);
  inst.params.block_len = get<std::uint64_t>(is);
  inst.params.measurements = get<std::uint64_t>(is);
  inst.params.sparsity = get<std::uint64_t>(is);
  inst.params.noise_var = get<double>(is);
  inst.params.seed = get<std::uint64_t>(is);
  inst.support.resize(inst.params.sparsity);
  for (std::size_t& s : inst.support) s = get<std::uint64_t>(is);

  const std::size_t m = inst.params.measurements;
  const std::size_t nd = inst.params.block_count * inst.params.block_len;
  inst.sensing = ComplexMatrix(m, nd);
  get_cvec(is, inst.sensing.entries());
  inst.signal.resize(nd);
  get_cvec(is, inst.signal);
  inst.noise.resize(m);
  get_cvec(is, inst.noise);
  inst.observation.resize(m);
  get_cvec(is, inst.observation);
  if (!is) throw std::runtime_error("truncated instance file: " + path.string());
  return inst;
}

}  // namespace bsr
