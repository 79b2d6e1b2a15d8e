#include "sharecause/io.h"

#include <gtest/gtest.h>

#include <set>

#include "test_support.h"

namespace sharecause {
namespace {

using testing::Gen;
using testing::TempDir;

TEST(LoadInteractionsTest, DuplicateRowKeptOnceWithWarning) {
  TempDir dir("io");
  write_text_file(dir / "y.csv", "user_id,news_id\nu1,n1\nu2,n1\nu1,n1\n");
  Warnings w;
  const auto s = load_interactions(dir / "y.csv", nullptr, nullptr, &w);
  EXPECT_EQ(s.num_positives(), 2u);
  EXPECT_EQ(s.num_users(), 2u);
  EXPECT_EQ(s.num_items(), 1u);
  EXPECT_EQ(s.users().id(1), "u2");
  ASSERT_EQ(w.size(), 1u);
  EXPECT_NE(w[0].find("duplicate"), std::string::npos);
}

TEST(LoadInteractionsTest, Errors) {
  TempDir dir("io");
  write_text_file(dir / "empty.csv", "user_id,news_id\n");
  EXPECT_THROW(load_interactions(dir / "empty.csv"), ValidationError);
  write_text_file(dir / "cols.csv", "user,news\na,b\n");
  EXPECT_THROW(load_interactions(dir / "cols.csv"), ValidationError);
  write_text_file(dir / "blank.csv", "user_id,news_id\n,n1\n");
  EXPECT_THROW(load_interactions(dir / "blank.csv"), ValidationError);
  EXPECT_THROW(load_interactions(dir / "missing.csv"), ValidationError);

  write_text_file(dir / "y.csv", "user_id,news_id\nu9,n0\n");
  const IndexMap users = IndexMap::numbered("u", 2), items = IndexMap::numbered("n", 2);
  EXPECT_THROW(load_interactions(dir / "y.csv", &users, &items), ValidationError);
}

TEST(LoadInteractionsTest, ResolvesAgainstGivenIds) {
  TempDir dir("io");
  write_text_file(dir / "y.csv", "user_id,news_id\nu1,n2\n");
  const IndexMap users = IndexMap::numbered("u", 3), items = IndexMap::numbered("n", 4);
  const auto s = load_interactions(dir / "y.csv", &users, &items);
  EXPECT_EQ(s.num_users(), 3u);
  EXPECT_EQ(s.num_items(), 4u);
  EXPECT_TRUE(s.contains(1, 2));
}

TEST(InteractionsRoundTripTest, RandomSets) {
  Gen g(91);
  TempDir dir("io");
  for (int trial = 0; trial < 10; ++trial) {
    const auto s = testing::random_interactions(g, g.integer(2, 30), g.integer(2, 30), 0.3);
    write_interactions(dir / "y.csv", s);
    const auto back = load_interactions(dir / "y.csv", &s.users(), &s.items());
    EXPECT_EQ(back.pairs(), s.pairs());
  }
  const IndexMap ids = IndexMap::numbered("x", 5);
  write_index_map(dir / "ids.csv", ids, "user_id");
  EXPECT_EQ(load_index_map(dir / "ids.csv", "user_id"), ids);
}

TEST(NewsTableTest, RoundTripWithText) {
  TempDir dir("io");
  NewsTable news;
  news.ids = IndexMap({"a", "b"});
  news.labels = {NewsLabel::kFake, NewsLabel::kTrue};
  news.texts = {"hello, world", "line \"quoted\""};
  write_news(dir / "news.csv", news);
  const auto back = load_news(dir / "news.csv");
  EXPECT_EQ(back.ids, news.ids);
  EXPECT_EQ(back.labels, news.labels);
  EXPECT_EQ(back.texts, news.texts);

  write_text_file(dir / "bad.csv", "news_id,label\nx,maybe\n");
  EXPECT_THROW(load_news(dir / "bad.csv"), ValidationError);
  write_text_file(dir / "dup.csv", "news_id,label\nx,fake\nx,true\n");
  EXPECT_THROW(load_news(dir / "dup.csv"), ValidationError);
}

std::string attribute_header() {
  std::string h = "user_id";
  for (const auto& name : attribute_schema()) h += "," + name;
  return h + "\n";
}

TEST(UserAttributesTest, LoadsTwoRows) {
  TempDir dir("io");
  write_text_file(dir / "a.csv", attribute_header() +
                                     "u0,1,0,10,20,30,40,1,25,100\n"
                                     "u1,0,1,11,21,31,41,0,35,200\n");
  const auto t = load_user_attributes(dir / "a.csv");
  EXPECT_EQ(t.user_ids, (std::vector<std::string>{"u0", "u1"}));
  EXPECT_EQ(t.names, attribute_schema());
  EXPECT_EQ(t.values(1, 7), 35.0);
  EXPECT_EQ(t.values(0, 0), 1.0);
}

TEST(UserAttributesTest, Errors) {
  TempDir dir("io");
  write_text_file(dir / "bin.csv", attribute_header() + "u0,2,0,10,20,30,40,1,25,100\n");
  EXPECT_THROW(load_user_attributes(dir / "bin.csv"), ValidationError);
  write_text_file(dir / "num.csv", attribute_header() + "u0,1,0,ten,20,30,40,1,25,100\n");
  EXPECT_THROW(load_user_attributes(dir / "num.csv"), ValidationError);
  write_text_file(dir / "dup.csv", attribute_header() +
                                       "u0,1,0,10,20,30,40,1,25,100\n"
                                       "u0,1,0,10,20,30,40,1,25,100\n");
  EXPECT_THROW(load_user_attributes(dir / "dup.csv"), ValidationError);
  write_text_file(dir / "extra.csv",
                  "user_id,verified,org,status_count,friends_count,followers_count,"
                  "favorites_count,gender,age,register_time,shoe_size\n"
                  "u0,1,0,10,20,30,40,1,25,100,9\n");
  EXPECT_THROW(load_user_attributes(dir / "extra.csv"), ValidationError);
}

TEST(UserAttributesTest, RoundTripIsExact) {
  Gen g(92);
  TempDir dir("io");
  AttributeTable t;
  t.names = attribute_schema();
  t.values.resize(20, t.names.size());
  for (int r = 0; r < 20; ++r) {
    t.user_ids.push_back("user" + std::to_string(r));
    for (std::size_t c = 0; c < t.names.size(); ++c) {
      t.values(r, c) = AttributeTable::is_binary_column(t.names[c])
                           ? static_cast<double>(g.coin())
                           : g.normal(100.0, 40.0);
    }
  }
  write_user_attributes(dir / "a.csv", t);
  const auto back = load_user_attributes(dir / "a.csv");
  EXPECT_EQ(back.user_ids, t.user_ids);
  EXPECT_LT((back.values - t.values).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(FeaturizeContentTest, IdenticalTextsAndCaseFolding) {
  const auto f = featurize_content({"Breaking NEWS today", "breaking news TODAY"}, 64);
  EXPECT_EQ(f.row(0), f.row(1));
  EXPECT_NEAR(f.row(0).norm(), 1.0, 1e-12);
}

TEST(FeaturizeContentTest, DisjointVocabulariesAreNearlyOrthogonal) {
  Gen g(93);
  for (std::size_t dims : {256u, 1024u}) {
    std::string a, b;
    for (int k = 0; k < 8; ++k) {
      a += "alpha" + std::to_string(k) + " ";
      b += "omega" + std::to_string(k) + " ";
    }
    const auto f = featurize_content({a, b}, dims);
    EXPECT_LT(std::abs(f.row(0).dot(f.row(1))), 0.1) << dims;
  }
}

TEST(FeaturizeContentTest, EmptyTextWarnsAndTokensSplitOnPunctuation) {
  Warnings w;
  const auto f = featurize_content({"", "a-b", "a b", "!!!"}, 16, &w);
  EXPECT_EQ(f.row(0).norm(), 0.0);
  EXPECT_EQ(f.row(3).norm(), 0.0);
  EXPECT_EQ(w.size(), 2u);
  EXPECT_EQ(f.row(1), f.row(2));
  EXPECT_THROW(featurize_content({"x"}, 1), ConfigError);
}

TEST(FeaturizeContentPropertyTest, RowsAreUnitOrZero) {
  Gen g(94);
  for (int trial = 0; trial < 50; ++trial) {
    std::string text;
    const int len = g.integer(0, 40);
    for (int k = 0; k < len; ++k) text.push_back(static_cast<char>(g.integer(32, 126)));
    const auto f = featurize_content({text}, g.integer(2, 128));
    const double n = f.row(0).norm();
    EXPECT_TRUE(n == 0.0 || std::abs(n - 1.0) < 1e-12) << text;
  }
}

TEST(SplitTest, RandomModeSizesAndDeterminism) {
  InteractionSet s(IndexMap::numbered("u", 5), IndexMap::numbered("n", 2));
  for (int u = 0; u < 5; ++u) {
    s.add(u, 0);
    s.add(u, 1);
  }
  SplitOptions o;
  o.seed = 4;
  const auto a = split_train_test(s, o);
  EXPECT_EQ(a.train.num_positives(), 8u);
  EXPECT_EQ(a.test.num_positives(), 2u);
  for (const Pair& p : a.test.pairs()) EXPECT_FALSE(a.train.contains(p.user, p.item));
  const auto b = split_train_test(s, o);
  EXPECT_EQ(a.train.pairs(), b.train.pairs());
  o.ratio = 1.0;
  EXPECT_THROW(split_train_test(s, o), ConfigError);
}

TEST(SplitTest, UniformModeRedrawsHeldOutCells) {
  Gen g(95);
  const auto world = SyntheticWorld::from_tables(RowMatrix::Constant(40, 10, 0.5),
                                                 RowMatrix::Ones(40, 10));
  const auto observed = sample_interactions(world, 3);
  SplitOptions o;
  o.mode = SplitMode::kUniformExposureSynthetic;
  o.world = &world;
  o.seed = 8;
  const auto split = split_train_test(observed, o);

  // Interest is certain and test exposure is 1, so every held-out cell is a
  // test positive: 2 of each user's 10 cells.
  EXPECT_EQ(split.test.num_positives(), 80u);
  int exposed = 0;
  for (int e : split.exposed_per_item) exposed += e;
  EXPECT_EQ(exposed, 80);
  for (int u = 0; u < 40; ++u) {
    EXPECT_EQ(split.test.items_of(u).size(), 2u);
    for (int i : split.train.items_of(u)) {
      EXPECT_TRUE(observed.contains(u, i));
      EXPECT_FALSE(split.test.contains(u, i));
    }
  }

  o.world = nullptr;
  EXPECT_THROW(split_train_test(observed, o), ConfigError);
  const auto other = SyntheticWorld::from_tables(RowMatrix::Ones(3, 3), RowMatrix::Ones(3, 3));
  o.world = &other;
  EXPECT_THROW(split_train_test(observed, o), ValidationError);
}

TEST(SplitTest, ParseModes) {
  EXPECT_EQ(parse_split_mode("random"), SplitMode::kRandom);
  EXPECT_EQ(parse_split_mode("uniform_exposure_synthetic"),
            SplitMode::kUniformExposureSynthetic);
  EXPECT_THROW(parse_split_mode("stratified"), ConfigError);
}

TEST(PropensityFileTest, RoundTripPerItemAndPerPair) {
  Gen g(96);
  TempDir dir("io");
  const IndexMap users = IndexMap::numbered("u", 4), items = IndexMap::numbered("n", 6);
  std::vector<double> iv(6);
  for (auto& v : iv) v = g.uniform(0.01, 1.0);
  const auto per_item = PropensityTable::per_item(iv, 1.0, 1e-3);
  write_propensity(dir / "p.csv", per_item, users, items);
  EXPECT_EQ(load_propensity(dir / "p.csv", users, items).item_values(), iv);

  RowMatrix pv(4, 6);
  for (Eigen::Index k = 0; k < pv.size(); ++k) pv.data()[k] = g.uniform(0.01, 1.0);
  const auto per_pair = PropensityTable::per_pair(pv, 1.0, 1e-3);
  write_propensity(dir / "pp.csv", per_pair, users, items);
  const auto back = load_propensity(dir / "pp.csv", users, items);
  EXPECT_EQ(back.kind(), PropensityKind::kPerPair);
  EXPECT_EQ(back.pair_values(), pv);

  write_text_file(dir / "short.csv", "item_id,theta\nn0,0.5\n");
  EXPECT_THROW(load_propensity(dir / "short.csv", users, items), ValidationError);
  write_text_file(dir / "high.csv", "item_id,theta\nn0,1.5\n");
  EXPECT_THROW(load_propensity(dir / "high.csv", users, IndexMap::numbered("n", 1)),
               ValidationError);
}

TEST(FileDigestTest, KnownFnvValues) {
  TempDir dir("io");
  write_text_file(dir / "empty", "");
  EXPECT_EQ(file_digest(dir / "empty"), "cbf29ce484222325");
  write_text_file(dir / "a", "a");
  EXPECT_EQ(file_digest(dir / "a"), "af63dc4c8601ec8c");
  write_text_file(dir / "nested/deeper/b", "a");
  EXPECT_EQ(read_text_file(dir / "nested/deeper/b"), "a");
}

}  // namespace
}  // namespace sharecause
