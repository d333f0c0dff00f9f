#pragma once

// Text serialization for every artifact the pipeline persists.
//
//   tensor (.tns)   header "dims I J K", then one "i j k value" line per
//                   stored entry, 0-based indices.  Dense tensors list all
//                   I*J*K entries.
//   mask            header "dims I J K", then "slice t" lines and optional
//                   "entry i j k" lines.
//   factors         header "rank R dims I J K", optional "lambda ..." line,
//                   then the rows of A, B and C in that order.
//
// Values are printed with %.17g so a write/read round trip reproduces the
// exact double.

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "adasketch/common.hpp"
#include "adasketch/tensor.hpp"

namespace adasketch {

inline std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace detail {

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path + " for reading");
  return in;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  return out;
}

inline Dims parse_dims_header(std::istream& in, const std::string& path) {
  std::string tag;
  Dims dims;
  if (!(in >> tag >> dims.i >> dims.j >> dims.k) || tag != "dims")
    throw std::runtime_error(path + ": expected 'dims I J K' header");
  return dims;
}

}  // namespace detail

template <typename Scalar>
void write_tensor(const SparseTensor<Scalar>& tensor, const std::string& path) {
  auto out = detail::open_output(path);
  const Dims& d = tensor.dims();
  out << "dims " << d.i << ' ' << d.j << ' ' << d.k << '\n';
  for (const auto& e : tensor.entries())
    out << e.i << ' ' << e.j << ' ' << e.k << ' '
        << format_value(static_cast<double>(e.value)) << '\n';
}

template <typename Scalar>
void write_tensor(const DenseTensor<Scalar>& tensor, const std::string& path) {
  auto out = detail::open_output(path);
  const Dims& d = tensor.dims();
  out << "dims " << d.i << ' ' << d.j << ' ' << d.k << '\n';
  for (Index k = 0; k < d.k; ++k)
    for (Index j = 0; j < d.j; ++j)
      for (Index i = 0; i < d.i; ++i)
        out << i << ' ' << j << ' ' << k << ' '
            << format_value(static_cast<double>(tensor(i, j, k))) << '\n';
}

template <typename Scalar>
SparseTensor<Scalar> read_sparse_tensor(const std::string& path) {
  auto in = detail::open_input(path);
  const Dims dims = detail::parse_dims_header(in, path);
  std::vector<typename SparseTensor<Scalar>::Entry> entries;
  Index i, j, k;
  double value;
  while (in >> i >> j >> k >> value)
    entries.push_back({i, j, k, static_cast<Scalar>(value)});
  return SparseTensor<Scalar>(dims, std::move(entries));
}

template <typename Scalar>
DenseTensor<Scalar> read_dense_tensor(const std::string& path) {
  auto in = detail::open_input(path);
  const Dims dims = detail::parse_dims_header(in, path);
  Vector<Scalar> values = Vector<Scalar>::Zero(dims.count());
  Index i, j, k;
  double value;
  while (in >> i >> j >> k >> value) {
    require(i >= 0 && i < dims.i && j >= 0 && j < dims.j && k >= 0 && k < dims.k,
            path + ": entry index out of range");
    values[i + dims.i * (j + dims.j * k)] = static_cast<Scalar>(value);
  }
  return DenseTensor<Scalar>(dims, std::move(values));
}

inline void write_mask(const MaskTensor& mask, const std::string& path) {
  auto out = detail::open_output(path);
  const Dims& d = mask.dims();
  out << "dims " << d.i << ' ' << d.j << ' ' << d.k << '\n';
  for (Index t : mask.observed_slices()) out << "slice " << t << '\n';
  for (const auto& e : mask.extra_entries())
    out << "entry " << e[0] << ' ' << e[1] << ' ' << e[2] << '\n';
}

inline MaskTensor read_mask(const std::string& path) {
  auto in = detail::open_input(path);
  const Dims dims = detail::parse_dims_header(in, path);
  std::vector<Index> slices;
  std::vector<std::array<Index, 3>> extra;
  std::string tag;
  while (in >> tag) {
    if (tag == "slice") {
      Index t;
      if (!(in >> t)) throw std::runtime_error(path + ": malformed slice line");
      slices.push_back(t);
    } else if (tag == "entry") {
      std::array<Index, 3> e;
      if (!(in >> e[0] >> e[1] >> e[2]))
        throw std::runtime_error(path + ": malformed entry line");
      extra.push_back(e);
    } else {
      throw std::runtime_error(path + ": unknown mask line '" + tag + "'");
    }
  }
  return MaskTensor(dims, std::move(slices), std::move(extra));
}

template <typename Scalar>
void write_factors(const KruskalModel<Scalar>& model, const std::string& path) {
  auto out = detail::open_output(path);
  const Dims d = model.dims();
  out << "rank " << model.rank() << " dims " << d.i << ' ' << d.j << ' ' << d.k << '\n';
  if ((model.lambda.array() != Scalar(1)).any()) {
    out << "lambda";
    for (Index r = 0; r < model.rank(); ++r)
      out << ' ' << format_value(static_cast<double>(model.lambda[r]));
    out << '\n';
  }
  auto write_block = [&](const Matrix<Scalar>& m) {
    for (Index row = 0; row < m.rows(); ++row) {
      for (Index col = 0; col < m.cols(); ++col) {
        if (col) out << ' ';
        out << format_value(static_cast<double>(m(row, col)));
      }
      out << '\n';
    }
  };
  write_block(model.A);
  write_block(model.B);
  write_block(model.C);
}

template <typename Scalar>
KruskalModel<Scalar> read_factors(const std::string& path) {
  auto in = detail::open_input(path);
  std::string tag_rank, tag_dims;
  Index rank;
  Dims dims;
  if (!(in >> tag_rank >> rank >> tag_dims >> dims.i >> dims.j >> dims.k) ||
      tag_rank != "rank" || tag_dims != "dims")
    throw std::runtime_error(path + ": expected 'rank R dims I J K' header");
  in >> std::ws;
  Vector<Scalar> lambda;
  if (in.peek() == 'l') {
    std::string tag;
    in >> tag;
    if (tag != "lambda") throw std::runtime_error(path + ": unexpected line '" + tag + "'");
    lambda.resize(rank);
    for (Index r = 0; r < rank; ++r) {
      double v;
      if (!(in >> v)) throw std::runtime_error(path + ": malformed lambda line");
      lambda[r] = static_cast<Scalar>(v);
    }
  }
  auto read_block = [&](Index rows) {
    Matrix<Scalar> m(rows, rank);
    for (Index row = 0; row < rows; ++row)
      for (Index col = 0; col < rank; ++col) {
        double v;
        if (!(in >> v)) throw std::runtime_error(path + ": truncated factor block");
        m(row, col) = static_cast<Scalar>(v);
      }
    return m;
  };
  Matrix<Scalar> A = read_block(dims.i);
  Matrix<Scalar> B = read_block(dims.j);
  Matrix<Scalar> C = read_block(dims.k);
  return KruskalModel<Scalar>(std::move(A), std::move(B), std::move(C), std::move(lambda));
}

}  // namespace adasketch
