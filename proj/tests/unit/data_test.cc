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

#include "cfmea/dataset.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "cfmea/error.h"
#include "testing/oracles.h"

namespace cfmea {
namespace {

namespace fs = std::filesystem;

fs::path TempDir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("cfmea_data_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path WriteFile(const fs::path& dir, const std::string& name, const std::string& text) {
  const fs::path p = dir / name;
  std::ofstream(p) << text;
  return p;
}

ErrorCode CodeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kInput;
}

TEST(Split, DisjointCoverAndDeterministic) {
  std::vector<int> labels;
  for (int i = 0; i < 101; ++i) labels.push_back(i % 3 == 0);
  SplitSpec spec{0.8, 5};
  const SplitIndices a = ComputeSplit(labels, spec);
  const SplitIndices b = ComputeSplit(labels, spec);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.train.size(), 81u);
  EXPECT_EQ(a.test.size(), 20u);
  std::set<Index> all(a.train.begin(), a.train.end());
  for (Index r : a.test) EXPECT_TRUE(all.insert(r).second);
  EXPECT_EQ(all.size(), 101u);
}

TEST(Split, StratifiesWhenAClassWouldBeMissing) {
  // Only two positives: random splits often lose one side's positive.
  std::vector<int> labels(10, 0);
  labels[3] = 1;
  labels[7] = 1;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    const SplitIndices s = ComputeSplit(labels, {0.8, seed});
    auto has = [&](const std::vector<Index>& rows) {
      return std::any_of(rows.begin(), rows.end(), [&](Index r) { return labels[r] == 1; });
    };
    EXPECT_TRUE(has(s.train));
    EXPECT_TRUE(has(s.test));
  }
}

TEST(Split, BadFraction) {
  EXPECT_EQ(CodeOf([] { ComputeSplit({0, 1, 0, 1}, {1.0, 0}); }), ErrorCode::kConfiguration);
}

TEST(Standardizer, RoundTripAndConstantColumn) {
  Matrix x(4, 2);
  x << 1, 5, 2, 5, 3, 5, 4, 5;
  const Standardizer s = Standardizer::Fit(x);
  const Matrix z = s.Apply(x);
  EXPECT_NEAR(z.col(0).mean(), 0.0, 1e-12);
  EXPECT_TRUE(z.col(1).isZero(0.0));
  EXPECT_DOUBLE_EQ(s.stddev[1], 1.0);
  EXPECT_TRUE(s.Invert(z).isApprox(x, 1e-12));
  EXPECT_EQ(CodeOf([&] { s.Apply(Matrix::Zero(1, 3)); }), ErrorCode::kShape);
}

TEST(Dataset, ValidateRejects) {
  Dataset ds;
  ds.features = Matrix::Zero(3, 2);
  ds.labels = {0, 1};
  EXPECT_EQ(CodeOf([&] { ds.Validate(); }), ErrorCode::kData);
  ds.labels = {0, 1, 2};
  EXPECT_EQ(CodeOf([&] { ds.Validate(); }), ErrorCode::kData);
  ds.labels = {1, 1, 1};
  EXPECT_EQ(CodeOf([&] { ds.Validate(); }), ErrorCode::kData);
  ds.labels = {0, 1, 1};
  ds.features(0, 0) = std::nan("");
  EXPECT_EQ(CodeOf([&] { ds.Validate(); }), ErrorCode::kData);
}

TEST(LoadDataset, GmscDropsIndexAndMissingRows) {
  const fs::path dir = TempDir("gmsc");
  const fs::path p = WriteFile(dir, "cs-training.csv",
                               ",SeriousDlqin2yrs,Age,Income\n"
                               "1,0,30,1000\n"
                               "2,1,40,NA\n"
                               "3,1,50,3000\n"
                               "4,0,60,4000\n"
                               "5,1,20,5000\n"
                               "6,0,35,6000\n");
  const Dataset ds = LoadDataset("gmsc", p);
  EXPECT_EQ(ds.rows(), 5);
  EXPECT_EQ(ds.feature_names, (std::vector<std::string>{"Age", "Income"}));
  EXPECT_EQ(ds.labels, (std::vector<int>{0, 1, 0, 1, 0}));
  ASSERT_TRUE(ds.standardizer.has_value());
}

TEST(LoadDataset, CaliforniaMedianSplit) {
  const fs::path dir = TempDir("cal");
  const fs::path p = WriteFile(dir, "housing.csv",
                               "a,b,median_house_value\n"
                               "1,2,10\n3,4,20\n5,6,30\n7,8,40\n9,1,50\n");
  const Dataset ds = LoadDataset("california_housing", p);
  EXPECT_EQ(ds.labels, (std::vector<int>{0, 0, 0, 1, 1}));
}

TEST(LoadDataset, Errors) {
  const fs::path dir = TempDir("err");
  EXPECT_EQ(CodeOf([&] { LoadDataset("gmsc", dir / "missing.csv"); }), ErrorCode::kInput);
  EXPECT_EQ(CodeOf([&] { LoadDataset("mnist", dir / "x.csv"); }), ErrorCode::kConfiguration);
  const fs::path bad = WriteFile(dir, "bad.csv", "Time,V1,Class\n0,1,2\n1,2,0\n");
  EXPECT_EQ(CodeOf([&] { LoadDataset("credit_fraud", bad); }), ErrorCode::kData);
  const fs::path nolabel = WriteFile(dir, "nolabel.csv", "Time,V1\n0,1\n1,2\n");
  EXPECT_EQ(CodeOf([&] { LoadDataset("credit_fraud", nolabel); }), ErrorCode::kInput);
}

TEST(MakeSynthetic, BalancedStandardizedAndLearnable) {
  const Dataset ds = MakeSynthetic(2000, 10, 3.0, 42);
  EXPECT_EQ(ds.rows(), 2000);
  EXPECT_EQ(std::count(ds.labels.begin(), ds.labels.end(), 1), 1000);
  EXPECT_EQ(MakeSynthetic(2000, 10, 3.0, 42).features, ds.features);
  EXPECT_NE(MakeSynthetic(2000, 10, 3.0, 43).features, ds.features);
  const auto [train, test] = Split(ds, {0.8, 42});
  EXPECT_GE(testing::LogisticProbeAccuracy(train.features, train.labels, test.features,
                                           test.labels),
            0.95);
}

TEST(GenerateRandomQueries, RangeAndSeed) {
  const Matrix q = GenerateRandomQueries(500, 4, -2.0, 2.0, 3);
  EXPECT_GE(q.minCoeff(), -2.0);
  EXPECT_LT(q.maxCoeff(), 2.0);
  EXPECT_EQ(q, GenerateRandomQueries(500, 4, -2.0, 2.0, 3));
  EXPECT_EQ(CodeOf([] { GenerateRandomQueries(1, 1, 1.0, 1.0, 0); }),
            ErrorCode::kConfiguration);
}

TEST(UndersampleMajority, CapsRatio) {
  Dataset ds;
  ds.features = Matrix::Zero(100, 1);
  for (int i = 0; i < 100; ++i) ds.labels.push_back(i < 10 ? 1 : 0);
  for (int i = 0; i < 100; ++i) ds.features(i, 0) = i;
  const Dataset u = UndersampleMajority(ds, 3.0, 1);
  EXPECT_EQ(u.rows(), 40);
  EXPECT_EQ(std::count(u.labels.begin(), u.labels.end(), 1), 10);
}

TEST(SaveDataset, RoundTrip) {
  const fs::path dir = TempDir("save");
  const Dataset ds = MakeSynthetic(40, 3, 1.0, 7);
  SaveDataset(ds, dir);
  const Dataset r = LoadSavedDataset(dir);
  EXPECT_EQ(r.features, ds.features);
  EXPECT_EQ(r.labels, ds.labels);
  EXPECT_EQ(r.feature_names, ds.feature_names);
  ASSERT_TRUE(r.standardizer.has_value());
  EXPECT_EQ(r.standardizer->mean, ds.standardizer->mean);
}

}  // namespace
}  // namespace cfmea
