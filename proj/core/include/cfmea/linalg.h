// Copyright 2026 The cfmea Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CFMEA_LINALG_H_
#define CFMEA_LINALG_H_

#include <cstdint>

#include <Eigen/Core>

namespace cfmea {

// Rows are samples throughout the library.
using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Index = Eigen::Index;

// Argmax with the library-wide tie rule: the lowest class index wins.
int Argmax(const Eigen::Ref<const RowVector>& probs);

// Gathers the listed rows of `m` into a new matrix.
template <typename Indices>
Matrix GatherRows(const Matrix& m, const Indices& rows) {
  Matrix out(static_cast<Index>(rows.size()), m.cols());
  Index r = 0;
  for (auto idx : rows) out.row(r++) = m.row(static_cast<Index>(idx));
  return out;
}

bool AllFinite(const Matrix& m);

// 64-bit FNV-1a over raw bytes. Stable across runs and platforms with the
// same endianness; used for config hashes and query fingerprints.
uint64_t Fnv1a64(const void* data, std::size_t size,
                 uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace cfmea

#endif  // CFMEA_LINALG_H_
