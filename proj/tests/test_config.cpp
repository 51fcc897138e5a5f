#include <gtest/gtest.h>

#include <s2vec/config.hpp>

using namespace s2vec;

TEST(PipelineConfig, TextRoundTripCoversEveryKey) {
  PipelineConfig a;
  a.set("k_clusters", "7");
  a.set("noise", "0.25");
  a.set("mode", "vanilla");
  a.set("latent", "hidden_cell");
  a.set("eps", "1.5");
  a.set("projection_bias", "false");
  a.set("seed", "42");
  const auto text = a.to_text();
  PipelineConfig b;
  apply_config_text(b, text);
  EXPECT_EQ(b.to_text(), text);
  EXPECT_EQ(b.synthetic.k_clusters, 7);
  EXPECT_EQ(b.train.noise_magnitude, 0.25);
  EXPECT_EQ(b.train.mode, TrainMode::vanilla);
  EXPECT_EQ(b.latent, LatentKind::hidden_cell);
  EXPECT_FALSE(b.train.projection_bias);
  EXPECT_EQ(b.train.sampler.seed, 42u);
  EXPECT_EQ(b.synthetic.seed, 42u);
  for (const auto& key : PipelineConfig::keys()) EXPECT_NE(text.find(key + "="), std::string::npos) << key;
}

TEST(PipelineConfig, CommentsBlankLinesAndErrors) {
  PipelineConfig c;
  apply_config_text(c, "# header\n\n  hidden = 12   # trailing\neps=auto\n");
  EXPECT_EQ(c.train.hidden, 12u);
  EXPECT_EQ(c.eps, 0.0);
  EXPECT_THROW(apply_config_text(c, "nonsense\n"), ConfigError);
  EXPECT_THROW(apply_config_text(c, "unknown_key=1\n"), ConfigError);
  EXPECT_THROW(apply_config_text(c, "hidden=abc\n"), ConfigError);
  EXPECT_THROW(apply_config_text(c, "mode=fancy\n"), ConfigError);
  try {
    apply_config_text(c, "seed=1\nnoise=nan\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(PipelineConfig, ThreadsPropagateAndDbscanEps) {
  PipelineConfig c;
  c.set_threads(0);
  EXPECT_EQ(c.threads, 1u);
  c.set("threads", "4");
  EXPECT_EQ(c.train.threads, 4u);
  DistanceMatrix d(3);
  d.set(0, 1, 1.0);
  d.set(0, 2, 2.0);
  d.set(1, 2, 3.0);
  c.eps_percentile = 50.0;
  EXPECT_DOUBLE_EQ(c.dbscan_for(d).eps, 2.0);
  c.eps = 0.7;
  EXPECT_DOUBLE_EQ(c.dbscan_for(d).eps, 0.7);
}
