#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "emofs/dataset.hpp"
#include "test_support.hpp"

using namespace emofs;
using test_support::TempDir;

namespace {

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

// CSV with the standard header and constant-ish numeric payload.
std::string make_csv(std::size_t rows, std::size_t cols) {
  std::ostringstream out;
  out << "subject,label";
  for (std::size_t j = 0; j < cols; ++j) out << ",f" << j;
  out << "\n";
  for (std::size_t i = 0; i < rows; ++i) {
    out << "spk" << i % 3 << "," << (i % 2 == 0 ? "anger" : "neutral");
    for (std::size_t j = 0; j < cols; ++j)
      out << "," << (static_cast<double>(i + j) * 0.5);
    out << "\n";
  }
  return out.str();
}

DatasetManifest manifest_for(const std::string& csv, FeatureSetTag tag,
                             std::size_t dim = 0) {
  DatasetManifest m;
  m.csv_path = csv;
  m.feature_set_tag = tag;
  m.expected_dimension = dim;
  m.normalize();
  return m;
}

}  // namespace

TEST_CASE("egemaps manifest loads a 10x88 file") {
  TempDir tmp("dataset");
  write_file(tmp.file("a.csv"), make_csv(10, 88));
  const LabeledDataset ds =
      load_dataset(manifest_for(tmp.file("a.csv"), FeatureSetTag::egemaps));
  CHECK(ds.num_instances() == 10);
  CHECK(ds.num_features() == 88);
  CHECK(ds.class_set == std::vector<std::string>{"anger", "neutral"});
  CHECK(ds.feature_names.front() == "f0");
  CHECK(ds.features(1, 2) == 1.5);
}

TEST_CASE("emobase manifest expects 988 columns") {
  TempDir tmp("dataset");
  write_file(tmp.file("b.csv"), make_csv(2, 988));
  const LabeledDataset ds =
      load_dataset(manifest_for(tmp.file("b.csv"), FeatureSetTag::emobase));
  CHECK(ds.num_features() == 988);
}

TEST_CASE("87 columns under the egemaps tag is a dimension error") {
  TempDir tmp("dataset");
  write_file(tmp.file("c.csv"), make_csv(1, 87));
  try {
    load_dataset(manifest_for(tmp.file("c.csv"), FeatureSetTag::egemaps));
    FAIL("expected a dimension error");
  } catch (const Error& e) {
    CHECK(e.kind() == "dimension");
  }
}

TEST_CASE("malformed rows fail with parse errors naming the line") {
  TempDir tmp("dataset");
  SUBCASE("ragged row") {
    write_file(tmp.file("d.csv"), "subject,label,f0,f1\ns1,a,1,2\ns1,b,3\n");
    try {
      load_dataset(manifest_for(tmp.file("d.csv"), FeatureSetTag::custom, 2));
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == "parse");
      CHECK(std::string(e.what()).find("3") != std::string::npos);
    }
  }
  SUBCASE("non-numeric cell") {
    write_file(tmp.file("e.csv"), "subject,label,f0\ns1,a,1\ns2,b,oops\n");
    CHECK_THROWS_AS(
        load_dataset(manifest_for(tmp.file("e.csv"), FeatureSetTag::custom, 1)),
        Error);
  }
  SUBCASE("empty label") {
    write_file(tmp.file("f.csv"), "subject,label,f0\ns1,,1\n");
    CHECK_THROWS_AS(
        load_dataset(manifest_for(tmp.file("f.csv"), FeatureSetTag::custom, 1)),
        Error);
  }
  SUBCASE("missing label column") {
    write_file(tmp.file("g.csv"), "subject,emotion,f0\ns1,a,1\n");
    CHECK_THROWS_AS(
        load_dataset(manifest_for(tmp.file("g.csv"), FeatureSetTag::custom, 1)),
        Error);
  }
  SUBCASE("non-finite value") {
    write_file(tmp.file("h.csv"), "subject,label,f0\ns1,a,inf\n");
    CHECK_THROWS_AS(
        load_dataset(manifest_for(tmp.file("h.csv"), FeatureSetTag::custom, 1)),
        Error);
  }
}

TEST_CASE("custom manifests require an explicit dimension") {
  DatasetManifest m;
  m.csv_path = "x.csv";
  m.feature_set_tag = FeatureSetTag::custom;
  CHECK_THROWS_AS(m.normalize(), Error);
}

TEST_CASE("manifest JSON roundtrips through save and load") {
  TempDir tmp("dataset");
  DatasetManifest m;
  m.csv_path = tmp.file("data.csv");
  m.feature_set_tag = FeatureSetTag::custom;
  m.expected_dimension = 7;
  m.label_column = "emotion";
  m.subject_column = "speaker";
  m.name = "mini";
  save_manifest(m, tmp.file("m.json"));
  const DatasetManifest back = load_manifest(tmp.file("m.json"));
  CHECK(back.csv_path == m.csv_path);
  CHECK(back.feature_set_tag == FeatureSetTag::custom);
  CHECK(back.expected_dimension == 7);
  CHECK(back.label_column == "emotion");
  CHECK(back.subject_column == "speaker");
  CHECK(back.name == "mini");
}

TEST_CASE("relative csv paths resolve against the manifest directory") {
  TempDir tmp("dataset");
  std::filesystem::create_directories(tmp.path() / "sub");
  write_file((tmp.path() / "sub" / "d.csv").string(), make_csv(3, 2));
  write_file(tmp.file("sub/m.json"),
             "{\"csv_path\": \"d.csv\", \"feature_set_tag\": \"custom\", "
             "\"expected_dimension\": 2}");
  const DatasetManifest m = load_manifest(tmp.file("sub/m.json"));
  const LabeledDataset ds = load_dataset(m);
  CHECK(ds.num_instances() == 3);
}

TEST_CASE("z-score standardizes training columns") {
  using test_support::dataset_from_columns;
  SUBCASE("train column applied to itself") {
    const Matrix train = dataset_from_columns({{1, 2, 3}}, {"a", "b", "a"})
                             .features;
    const NormalizationStats stats = fit_zscore(train);
    const Matrix z = apply_zscore(stats, train);
    const double mean = (z(0, 0) + z(1, 0) + z(2, 0)) / 3.0;
    double var = 0.0;
    for (std::size_t i = 0; i < 3; ++i) var += (z(i, 0) - mean) * (z(i, 0) - mean);
    var /= 3.0;
    CHECK(std::abs(mean) < 1e-9);
    CHECK(std::abs(std::sqrt(var) - 1.0) < 1e-9);
  }
  SUBCASE("constant column maps to zeros") {
    const Matrix train = dataset_from_columns({{5, 5, 5}}, {"a", "b", "a"})
                             .features;
    const Matrix z = apply_zscore(fit_zscore(train), train);
    CHECK(z(0, 0) == 0.0);
    CHECK(z(1, 0) == 0.0);
    CHECK(z(2, 0) == 0.0);
  }
  SUBCASE("train [0,2] applied to [4] gives 3") {
    Matrix train(2, 1);
    train(0, 0) = 0.0;
    train(1, 0) = 2.0;
    Matrix apply(1, 1);
    apply(0, 0) = 4.0;
    const Matrix z = apply_zscore(fit_zscore(train), apply);
    CHECK(z(0, 0) == doctest::Approx(3.0).epsilon(1e-12));
  }
  SUBCASE("dimension mismatch") {
    Matrix train(2, 2);
    Matrix apply(1, 1);
    CHECK_THROWS_AS(apply_zscore(fit_zscore(train), apply), Error);
  }
}

TEST_CASE("fit_apply_zscore fits on train only") {
  using test_support::dataset_from_columns;
  const LabeledDataset train = dataset_from_columns({{0, 2}}, {"a", "b"});
  const LabeledDataset apply = dataset_from_columns({{4}}, {"a"});
  const auto [stats, out] = fit_apply_zscore(train, apply);
  CHECK(stats.means[0] == 1.0);
  CHECK(out.features(0, 0) == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("combine_datasets concatenates corpora and unions classes") {
  using test_support::random_dataset;
  LabeledDataset a = random_dataset(535, 3, 7, 1);
  a.name = "emo_a";
  LabeledDataset b = random_dataset(480, 3, 4, 2);
  b.name = "emo_b";
  LabeledDataset c = random_dataset(588, 3, 7, 3);
  c.name = "emo_c";
  // Third corpus carries one label the first never saw.
  for (auto& l : c.labels)
    if (l == "c6") l = "surprise";
  c.class_set[6] = "surprise";

  const std::vector<LabeledDataset> in = {a, b, c};
  const LabeledDataset combined = combine_datasets(in);
  CHECK(combined.num_instances() == 1603);
  CHECK(combined.class_set.size() == 8);  // 7 shared + surprise
  CHECK(combined.subject_ids.front().rfind("emo_a:", 0) == 0);
  CHECK(combined.subject_ids.back().rfind("emo_c:", 0) == 0);
  CHECK(combined.features(535, 0) == b.features(0, 0));

  SUBCASE("schema mismatch is rejected") {
    LabeledDataset odd = random_dataset(4, 4, 2, 4);
    const std::vector<LabeledDataset> bad = {a, odd};
    CHECK_THROWS_AS(combine_datasets(bad), Error);
  }
  SUBCASE("single input keeps data but prefixes subjects") {
    const std::vector<LabeledDataset> one = {a};
    const LabeledDataset same = combine_datasets(one);
    CHECK(same.num_instances() == a.num_instances());
    CHECK(same.features == a.features);
    CHECK(same.subject_ids[0] == "emo_a:" + a.subject_ids[0]);
  }
}

TEST_CASE("dataset CSV roundtrip is bit-exact") {
  TempDir tmp("dataset");
  LabeledDataset ds = test_support::random_dataset(17, 5, 3, 99);
  // Awkward values that expose lossy formatting.
  ds.features(0, 0) = 0.1;
  ds.features(1, 1) = 1.0 / 3.0;
  ds.features(2, 2) = 1e-300;
  ds.features(3, 3) = -12345678.90123456789;
  save_dataset(ds, tmp.file("rt.csv"));
  const LabeledDataset back =
      load_dataset(manifest_for(tmp.file("rt.csv"), FeatureSetTag::custom, 5));
  CHECK(back.features == ds.features);
  CHECK(back.labels == ds.labels);
  CHECK(back.subject_ids == ds.subject_ids);
  CHECK(back.feature_names == ds.feature_names);
  CHECK(back.class_set == ds.class_set);
}

TEST_CASE("peak normalization scales to full range") {
  SUBCASE("worked examples") {
    const std::vector<double> a = wav_peak_normalize(std::vector<double>{0.1, -0.2});
    CHECK(a[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(a[1] == doctest::Approx(-1.0).epsilon(1e-12));
    const std::vector<double> b =
        wav_peak_normalize(std::vector<double>{1.0, -0.5});
    CHECK(b[0] == 1.0);
    CHECK(b[1] == -0.5);
  }
  SUBCASE("all-zero input errors") {
    CHECK_THROWS_AS(wav_peak_normalize(std::vector<double>{0, 0, 0}), Error);
    CHECK_THROWS_AS(wav_peak_normalize(std::vector<double>{}), Error);
  }
  SUBCASE("idempotent") {
    Rng rng(5);
    std::vector<double> x;
    for (int i = 0; i < 64; ++i) x.push_back(rng.normal() * 0.3);
    const std::vector<double> once = wav_peak_normalize(x);
    const std::vector<double> twice = wav_peak_normalize(once);
    for (std::size_t i = 0; i < x.size(); ++i)
      CHECK(std::abs(once[i] - twice[i]) <= 1e-12);
  }
}

TEST_CASE("wav container roundtrips float samples") {
  TempDir tmp("dataset");
  WavBuffer buf;
  buf.sample_rate = 8000;
  Rng rng(11);
  for (int i = 0; i < 100; ++i)
    buf.samples.push_back(static_cast<float>(rng.normal() * 0.2));
  write_wav(buf, tmp.file("t.wav"));
  const WavBuffer back = read_wav(tmp.file("t.wav"));
  CHECK(back.sample_rate == 8000);
  CHECK(back.samples == buf.samples);

  SUBCASE("bad magic is rejected") {
    std::ofstream out(tmp.file("bad.wav"), std::ios::binary);
    out << "NOTAWAVE________";
    out.close();
    CHECK_THROWS_AS(read_wav(tmp.file("bad.wav")), Error);
  }
  SUBCASE("truncated payload is rejected") {
    std::ifstream in(tmp.file("t.wav"), std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
    std::ofstream out(tmp.file("cut.wav"), std::ios::binary);
    out << bytes.substr(0, bytes.size() - 7);
    out.close();
    CHECK_THROWS_AS(read_wav(tmp.file("cut.wav")), Error);
  }
}

TEST_CASE("validate_dataset rejects inconsistent structures") {
  LabeledDataset ds = test_support::random_dataset(4, 2, 2, 1);
  SUBCASE("duplicate feature names") {
    ds.feature_names[1] = ds.feature_names[0];
    CHECK_THROWS_AS(validate_dataset(ds), Error);
  }
  SUBCASE("label outside class_set") {
    ds.labels[2] = "mystery";
    CHECK_THROWS_AS(validate_dataset(ds), Error);
  }
  SUBCASE("subject count mismatch") {
    ds.subject_ids.pop_back();
    CHECK_THROWS_AS(validate_dataset(ds), Error);
  }
}
