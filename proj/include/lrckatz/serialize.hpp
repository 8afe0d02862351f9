#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <iterator>
#include <ostream>
#include <string>
#include <vector>

#include "lrckatz/error.hpp"
#include "lrckatz/index.hpp"

// Container layout (all little-endian):
//   "KLRC" | u32 version | u64 seed | f64 alpha | f64 spectral_norm
//   graph      : u64 n, u64 nnz, u64 offsets[n+1], u64 cols[nnz], i64 ids[n]
//   partition  : u64 n1, u64 n2, u8 exceeded, u64 perm[n], u64 nb, u64 bounds[nb]
//   m12, m22   : csr (u64 rows, cols, nnz, offsets[rows+1], indices[nnz], f64 values[nnz])
//   m11 factor : u64 blocks, then per block a factor record
//   m22 factor : factor record (u64 size, u64 order[size], u64 nnz,
//                u64 col_ptr[size+1], u64 rows[nnz], f64 values[nnz])
//   correction : u64 rows, u64 ell, f64 sigma[ell], f64 u[rows*ell] column-major
//   u64 FNV-1a of every preceding byte

namespace lrckatz {

namespace detail {

inline std::uint64_t fnv1a64(const unsigned char* data, std::size_t n) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= data[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

class Writer {
 public:
  void bytes(const char* p, std::size_t n) { buf_.append(p, n); }
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void index_array(const std::vector<Index>& a) {
    for (Index v : a) i64(v);
  }
  void double_array(const std::vector<double>& a) {
    for (double v : a) f64(v);
  }
  std::string& buffer() { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  Reader(const unsigned char* p, std::size_t n) : p_(p), n_(n) {}

  void need(std::size_t k) const {
    if (k > n_ - pos_) throw IndexFormatError(IndexFormatError::Kind::malformed, "index payload ends early");
  }
  std::uint8_t u8() {
    need(1);
    return p_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{p_[pos_++]} << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{p_[pos_++]} << (8 * i);
    return v;
  }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64() { return std::bit_cast<double>(u64()); }

  /// Length prefix, bounded by the bytes that remain so corrupt counts cannot
  /// trigger huge allocations.
  std::size_t count(std::size_t elem_size) {
    const std::uint64_t c = u64();
    if (c > (n_ - pos_) / elem_size) throw IndexFormatError(IndexFormatError::Kind::malformed, "implausible length");
    return static_cast<std::size_t>(c);
  }
  std::vector<Index> index_array(std::size_t c) {
    need(c * 8);
    std::vector<Index> a(c);
    for (auto& v : a) v = i64();
    return a;
  }
  std::vector<double> double_array(std::size_t c) {
    need(c * 8);
    std::vector<double> a(c);
    for (auto& v : a) v = f64();
    return a;
  }
  bool at_end() const { return pos_ == n_; }

 private:
  const unsigned char* p_;
  std::size_t n_;
  std::size_t pos_ = 0;
};

inline void write_csr(Writer& w, const CsrMatrix& m) {
  w.i64(m.rows);
  w.i64(m.cols);
  w.i64(m.nnz());
  w.index_array(m.offsets);
  w.index_array(m.indices);
  w.double_array(m.values);
}

inline CsrMatrix read_csr(Reader& r) {
  CsrMatrix m;
  m.rows = r.i64();
  m.cols = r.i64();
  if (m.rows < 0 || m.cols < 0) throw IndexFormatError(IndexFormatError::Kind::malformed, "negative dimension");
  const std::size_t nnz = r.count(16);
  m.offsets = r.index_array(static_cast<std::size_t>(m.rows) + 1);
  m.indices = r.index_array(nnz);
  m.values = r.double_array(nnz);
  if (m.offsets.front() != 0 || m.offsets.back() != static_cast<Index>(nnz))
    throw IndexFormatError(IndexFormatError::Kind::malformed, "bad CSR offsets");
  return m;
}

inline void write_factor(Writer& w, const SparseCholesky& f) {
  w.i64(f.size());
  w.index_array(f.order());
  const auto& l = f.factor();
  w.i64(l.nnz());
  w.index_array(l.col_ptr);
  w.index_array(l.row_idx);
  w.double_array(l.values);
}

inline SparseCholesky read_factor(Reader& r) {
  const std::size_t n = r.count(8);
  auto order = r.index_array(n);
  LowerCsc l;
  l.n = static_cast<Index>(n);
  const std::size_t nnz = r.count(16);
  l.col_ptr = r.index_array(n + 1);
  l.row_idx = r.index_array(nnz);
  l.values = r.double_array(nnz);
  if (l.col_ptr.back() != static_cast<Index>(nnz)) throw IndexFormatError(IndexFormatError::Kind::malformed, "bad factor");
  return SparseCholesky::from_parts(std::move(order), std::move(l));
}

}  // namespace detail

inline constexpr char index_magic[4] = {'K', 'L', 'R', 'C'};

inline std::string serialize_index(const KatzIndex& idx) {
  detail::Writer w;
  w.bytes(index_magic, 4);
  w.u32(KatzIndex::format_version);
  w.u64(idx.seed);
  w.f64(idx.alpha);
  w.f64(idx.spectral_norm);

  const Graph& g = idx.graph;
  w.i64(g.num_nodes());
  w.i64(static_cast<Index>(g.col_indices().size()));
  w.index_array(g.row_offsets());
  w.index_array(g.col_indices());
  for (auto id : g.original_ids()) w.i64(id);

  const BlockPartition& bp = idx.partition;
  w.i64(bp.n1);
  w.i64(bp.n2);
  w.u8(bp.separator_exceeded ? 1 : 0);
  w.index_array(bp.perm);
  w.i64(static_cast<Index>(bp.part_boundaries.size()));
  w.index_array(bp.part_boundaries);

  detail::write_csr(w, idx.m12);
  detail::write_csr(w, idx.m22);

  w.i64(static_cast<Index>(idx.m11_factor.blocks().size()));
  for (const auto& b : idx.m11_factor.blocks()) detail::write_factor(w, b);
  detail::write_factor(w, idx.m22_factor);

  w.i64(idx.correction.rows);
  w.i64(idx.correction.ell);
  w.double_array(idx.correction.sigma);
  w.double_array(idx.correction.u);

  std::string& buf = w.buffer();
  const auto sum = detail::fnv1a64(reinterpret_cast<const unsigned char*>(buf.data()), buf.size());
  w.u64(sum);
  return std::move(buf);
}

inline void save_index(const KatzIndex& idx, std::ostream& out) {
  const std::string bytes = serialize_index(idx);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed to write index");
}

inline KatzIndex deserialize_index(const std::string& bytes) {
  using Kind = IndexFormatError::Kind;
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::size_t n = bytes.size();
  if (n < 4 || std::memcmp(p, index_magic, 4) != 0) {
    // a prefix of the magic is a truncated file, anything else is foreign
    if (n < 4 && std::memcmp(p, index_magic, n) == 0) throw IndexFormatError(Kind::checksum, "index stream is truncated");
    throw IndexFormatError(Kind::magic, "not a KLRC index (bad magic)");
  }
  if (n < 8 + 8) throw IndexFormatError(Kind::checksum, "index stream is truncated");
  detail::Reader head(p + 4, 4);
  const std::uint32_t version = head.u32();
  if (version != KatzIndex::format_version)
    throw IndexFormatError(Kind::version, "unsupported index version " + std::to_string(version));
  detail::Reader tail(p + n - 8, 8);
  const std::uint64_t stored = tail.u64();
  if (detail::fnv1a64(p, n - 8) != stored) throw IndexFormatError(Kind::checksum, "index checksum mismatch");

  detail::Reader r(p + 8, n - 16);
  KatzIndex idx;
  idx.seed = r.u64();
  idx.alpha = r.f64();
  idx.spectral_norm = r.f64();

  const std::size_t nodes = r.count(8);
  const std::size_t nnz = r.count(8);
  auto offsets = r.index_array(nodes + 1);
  auto cols = r.index_array(nnz);
  std::vector<std::int64_t> ids(nodes);
  for (auto& id : ids) id = r.i64();
  try {
    idx.graph = Graph::from_csr(std::move(offsets), std::move(cols), std::move(ids));
  } catch (const DimensionError& e) {
    throw IndexFormatError(Kind::malformed, e.what());
  }

  BlockPartition& bp = idx.partition;
  bp.n1 = r.i64();
  bp.n2 = r.i64();
  bp.separator_exceeded = r.u8() != 0;
  if (bp.n1 < 0 || bp.n2 < 0 || static_cast<std::size_t>(bp.n1 + bp.n2) != nodes)
    throw IndexFormatError(Kind::malformed, "partition size mismatch");
  bp.perm = r.index_array(nodes);
  bp.part_boundaries = r.index_array(r.count(8));
  bp.inv_perm.assign(nodes, -1);
  for (std::size_t k = 0; k < nodes; ++k) {
    const Index u = bp.perm[k];
    if (u < 0 || static_cast<std::size_t>(u) >= nodes || bp.inv_perm[u] != -1)
      throw IndexFormatError(Kind::malformed, "partition is not a permutation");
    bp.inv_perm[u] = static_cast<Index>(k);
  }

  idx.m12 = detail::read_csr(r);
  idx.m22 = detail::read_csr(r);

  const std::size_t nblocks = r.count(8);
  std::vector<SparseCholesky> blocks;
  blocks.reserve(nblocks);
  for (std::size_t b = 0; b < nblocks; ++b) blocks.push_back(detail::read_factor(r));
  try {
    idx.m11_factor = BlockCholesky::from_parts(bp.part_boundaries, std::move(blocks));
  } catch (const DimensionError& e) {
    throw IndexFormatError(Kind::malformed, e.what());
  }
  idx.m22_factor = detail::read_factor(r);

  idx.correction.rows = r.i64();
  idx.correction.ell = r.i64();
  if (idx.correction.rows < 0 || idx.correction.ell < 0) throw IndexFormatError(Kind::malformed, "bad correction");
  idx.correction.sigma = r.double_array(static_cast<std::size_t>(idx.correction.ell));
  idx.correction.u = r.double_array(static_cast<std::size_t>(idx.correction.rows * idx.correction.ell));
  if (!r.at_end()) throw IndexFormatError(Kind::malformed, "trailing bytes in index payload");
  if (!idx.is_consistent()) throw IndexFormatError(Kind::malformed, "index fields are inconsistent");
  return idx;
}

inline KatzIndex load_index(std::istream& in) {
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("failed to read index");
  return deserialize_index(bytes);
}

}  // namespace lrckatz
