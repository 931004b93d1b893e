#include <gtest/gtest.h>

#include "chordbench/config_file.h"
#include "chordbench/error.h"
#include "chordbench/harness.h"

using namespace chordbench;

TEST(ConfigFile, ParsesSectionsAndValues) {
  const auto f = parse_config(R"(# top comment
name = "a # not a comment"

[labeler]
model_dim = 32   # trailing
ratio = 0.25
flag = true
list = [synthA, "synth B"]
)");
  ASSERT_EQ(f.sections.size(), 2u);
  EXPECT_EQ(f.sections[0].name, "");
  EXPECT_EQ(f.sections[0].get_string("name"), "a # not a comment");
  const auto* s = f.find("labeler");
  ASSERT_NE(s, nullptr);
  EXPECT_EQ(s->get_int("model_dim"), 32);
  EXPECT_DOUBLE_EQ(s->get_double("ratio"), 0.25);
  EXPECT_TRUE(s->get_bool("flag"));
  EXPECT_EQ(s->get_list("list"), (std::vector<std::string>{"synthA", "synth B"}));
  EXPECT_EQ(s->get_int("absent", 4), 4);
  EXPECT_THROW(s->get_int("absent"), ParseError);
  EXPECT_THROW(s->get_int("ratio"), ParseError);
  EXPECT_THROW(s->get_bool("model_dim"), ParseError);
  EXPECT_THROW(s->require_known({"model_dim"}), ParseError);
  EXPECT_EQ(s->find("ratio")->line, 6);
}

TEST(ConfigFile, Errors) {
  EXPECT_THROW(parse_config("[a]\nx = 1\nx = 2\n"), ParseError);
  EXPECT_THROW(parse_config("[a]\n[a]\n"), ParseError);
  EXPECT_THROW(parse_config("[bad name]\n"), ParseError);
  EXPECT_THROW(parse_config("[a]\njust words\n"), ParseError);
  EXPECT_THROW(parse_config("[a]\nx = \"open\n"), ParseError);
  try {
    parse_config("[a]\n\nnope\n", "exp.cfg");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("exp.cfg:3"), std::string::npos) << e.what();
  }
}

TEST(Experiments, DefaultsAndOverrides) {
  const auto f = parse_config(R"(
[defaults]
seed = 9
folds = 4

[labeler]
model_dim = 16
heads = 2

[training]
max_epochs = 7
learning_rate = 0.002

[experiment.2]
description = "template on synthA"
eval = [synthA]

[experiment.5]
train = [synthA, synthB]
model = labeler
eval = [synthB]
balance = true
quota = 48
fold_order = contiguous
augment = true
seed = 3
)");
  const auto e = parse_experiments(f);
  ASSERT_EQ(e.size(), 2u);
  EXPECT_EQ(e[0].id, 2);
  EXPECT_EQ(e[0].model, ModelKind::kTemplate);
  EXPECT_EQ(e[0].seed, 9u);
  EXPECT_EQ(e[0].folds, 4);
  EXPECT_EQ(e[0].description, "template on synthA");
  EXPECT_EQ(e[1].model, ModelKind::kLabeler);
  EXPECT_EQ(e[1].train_datasets, (std::vector<std::string>{"synthA", "synthB"}));
  EXPECT_TRUE(e[1].balance);
  EXPECT_EQ(e[1].quota, 48u);
  EXPECT_EQ(e[1].fold_order, FoldOrder::kContiguous);
  EXPECT_TRUE(e[1].augment);
  EXPECT_EQ(e[1].seed, 3u);
  EXPECT_EQ(e[1].labeler.model_dim, 16u);
  EXPECT_EQ(e[1].labeler.n_heads, 2u);
  EXPECT_EQ(e[1].training.max_epochs, 7u);
  EXPECT_DOUBLE_EQ(e[1].training.learning_rate, 0.002);
}

TEST(Experiments, Errors) {
  EXPECT_THROW(parse_experiments(parse_config("[experiment.1]\n")), ParseError);
  EXPECT_THROW(parse_experiments(parse_config("[experiment.1]\neval = [a]\nmodel = labeler\n")), ParseError);
  EXPECT_THROW(parse_experiments(parse_config("[experiment.x]\neval = [a]\n")), ParseError);
  EXPECT_THROW(parse_experiments(parse_config("[other]\n")), ParseError);
  EXPECT_THROW(parse_experiments(parse_config("[experiment.1]\neval = [a]\ncolour = red\n")), ParseError);
  EXPECT_THROW(parse_experiments(parse_config("[experiment.1]\neval = [a]\nfold_order = random\n")), ParseError);
  EXPECT_THROW(parse_experiments(parse_config("[labeler]\nheads = 0\n[experiment.1]\neval = [a]\n")), ParseError);
  EXPECT_THROW(parse_experiments(parse_config("loose = 1\n[experiment.1]\neval = [a]\n")), ParseError);
}

TEST(ShippedConfigs, Parse) {
  const std::string root = CHORDBENCH_SOURCE_DIR;
  const auto matrix = parse_experiments(read_config(root + "/configs/experiments.cfg"));
  std::vector<int> ids;
  for (const auto& e : matrix) ids.push_back(e.id);
  EXPECT_EQ(ids, (std::vector<int>{0, 1, 2, 3, 7, 8, 9, 10, 11, 12, 13}));
  for (const auto& e : matrix) {
    EXPECT_EQ(e.balance, e.id >= 10) << e.id;
    EXPECT_EQ(e.model == ModelKind::kTemplate, e.id == 0) << e.id;
  }
  EXPECT_EQ(parse_experiments(read_config(root + "/configs/smoke.cfg")).size(), 3u);
  const auto labeler = read_config(root + "/configs/labeler.cfg");
  LabelerConfig c;
  TrainHyperparams h;
  apply_labeler_settings(*labeler.find("labeler"), c);
  apply_training_settings(*labeler.find("training"), h);
  EXPECT_EQ(c.model_dim, 64u);
  EXPECT_EQ(h.patience, 5u);
}
