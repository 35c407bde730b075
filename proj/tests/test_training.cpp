#include <doctest.h>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "led/training.hpp"

using namespace led;

namespace {

TrainConfig tiny_config() {
  TrainConfig cfg;
  cfg.seed = 11;
  cfg.epochs = 2;
  cfg.batches_per_epoch = 4;
  cfg.batch_size = 16;
  cfg.n_gen = 8;
  cfg.eval_every = 0;
  cfg.gen_arch.width = 8;
  cfg.gen_arch.blocks = 1;
  cfg.critic_arch.hidden = 8;
  cfg.critic_arch.depth = 2;
  cfg.policy.replace_prob = 0.05;
  cfg.policy.marginal_samples = 4;
  cfg.eval.sample_points = 200;
  cfg.eval.alpha_samples = 32;
  cfg.eval.bpd_points = 128;
  cfg.eval.kl_resolution = 33;
  cfg.data.kind = "ring";
  return cfg;
}

}  // namespace

TEST_SUITE("paramstore") {
  TEST_CASE("binary round trip is bit-exact") {
    Rng rng(3);
    ParamStore store;
    Tensor w({3, 4});
    for (auto& v : w.flat()) v = rng.gaussian() * 1e-7;
    store.add("net.w", std::move(w));
    store.add("net.b", Tensor::vector({1.0 / 3.0, -2.0 / 7.0}));
    store.add("net.stat", Tensor::scalar(0.1), /*trainable=*/false);
    store.at("net.w").step = 7;
    store.at("net.w").moment1[0] = 1e-300;

    const std::string path = "test_store.params";
    store.save(path);
    ParamStore back = ParamStore::load(path);
    std::remove(path.c_str());

    REQUIRE(back.count() == 3);
    CHECK(back.param(0).name == "net.w");
    CHECK(back.param(2).name == "net.stat");
    CHECK_FALSE(back.param(2).trainable);
    CHECK(back.at("net.w").step == 7);
    CHECK(back.content_hash() == store.content_hash());
    for (std::size_t i = 0; i < store.count(); ++i) {
      const auto& a = store.param(i);
      const auto& b = back.param(i);
      REQUIRE(a.value.same_shape(b.value));
      CHECK(std::memcmp(a.value.data(), b.value.data(), a.value.size() * sizeof(double)) == 0);
      CHECK(std::memcmp(a.moment1.data(), b.moment1.data(),
                        a.moment1.size() * sizeof(double)) == 0);
    }
  }
}

TEST_SUITE("training") {
  TEST_CASE("zero epochs returns the initialized checkpoint and an empty record") {
    TrainConfig cfg = tiny_config();
    cfg.epochs = 0;
    TrainResult res = train(cfg, make_gmm(cfg.data), "");
    CHECK(res.record.epochs.empty());
    CHECK(res.gen.params().count() > 0);
    CHECK(res.critic.params().count() > 0);

    // Initialization is a pure function of the seed.
    TrainResult res2 = train(cfg, make_gmm(cfg.data), "");
    CHECK(res.gen.params().content_hash() == res2.gen.params().content_hash());
    CHECK(res.critic.params().content_hash() == res2.critic.params().content_hash());
  }

  TEST_CASE("identical seeds give bit-identical runs and records") {
    TrainConfig cfg = tiny_config();
    TrainResult a = train(cfg, make_gmm(cfg.data), "");
    TrainResult b = train(cfg, make_gmm(cfg.data), "");
    CHECK(a.gen.params().content_hash() == b.gen.params().content_hash());
    CHECK(a.critic.params().content_hash() == b.critic.params().content_hash());
    REQUIRE(a.record.epochs.size() == b.record.epochs.size());
    for (std::size_t i = 0; i < a.record.epochs.size(); ++i) {
      CHECK(a.record.epochs[i].l_real == b.record.epochs[i].l_real);
      CHECK(a.record.epochs[i].l_fake == b.record.epochs[i].l_fake);
      CHECK(a.record.epochs[i].gen_objective == b.record.epochs[i].gen_objective);
    }
    CHECK(a.record.final_eval.hq.hq_percent == b.record.final_eval.hq.hq_percent);
    CHECK(a.record.final_eval.alpha.mean == b.record.final_eval.alpha.mean);

    TrainConfig other = cfg;
    other.seed = 12;
    TrainResult c = train(other, make_gmm(other.data), "");
    CHECK(a.gen.params().content_hash() != c.gen.params().content_hash());
  }

  TEST_CASE("checkpoints round trip and saved files are deterministic") {
    TrainConfig cfg = tiny_config();
    const std::string dir_a = "test_run_a";
    const std::string dir_b = "test_run_b";
    train(cfg, make_gmm(cfg.data), dir_a);
    train(cfg, make_gmm(cfg.data), dir_b);

    auto file_bytes = [](const std::string& path) {
      std::ifstream is(path, std::ios::binary);
      REQUIRE(is);
      return std::string(std::istreambuf_iterator<char>(is),
                         std::istreambuf_iterator<char>());
    };
    for (const char* name : {"/final/gen.params", "/final/critic.params", "/final/meta.json"}) {
      CHECK(file_bytes(dir_a + name) == file_bytes(dir_b + name));
    }

    Checkpoint ckpt = load_checkpoint(dir_a + "/final");
    CHECK(ckpt.config_hash == cfg.hash());
    CHECK(ckpt.epoch == cfg.epochs);
    CHECK(ckpt.gen.latent_dim() == cfg.gen_arch.latent_dim);
    CHECK(ckpt.gen.output_dim() == 2);
    // Loaded parameters are byte-identical to the trained ones.
    TrainResult again = train(cfg, make_gmm(cfg.data), "");
    CHECK(ckpt.gen.params().content_hash() == again.gen.params().content_hash());
    CHECK(ckpt.critic.params().content_hash() == again.critic.params().content_hash());

    std::filesystem::remove_all(dir_a);
    std::filesystem::remove_all(dir_b);
  }

  TEST_CASE("config json round trips") {
    TrainConfig cfg = tiny_config();
    cfg.entropy_weight = 0.23;
    cfg.policy.replace_prob = 0.11;
    cfg.data.kind = "grid";
    cfg.data.sigma = 0.07;
    TrainConfig back = TrainConfig::from_json(cfg.to_json());
    CHECK(back.to_json() == cfg.to_json());
    CHECK(back.hash() == cfg.hash());
    CHECK(back.entropy_weight == 0.23);
    CHECK(back.policy.replace_prob == 0.11);
    CHECK(back.data.kind == "grid");
  }

  TEST_CASE("single-cell sweep equals a plain train call") {
    TrainConfig cfg = tiny_config();
    auto cells = expressiveness_sweep(cfg, {cfg.gen_arch.width}, {cfg.gen_arch.blocks},
                                      make_gmm(cfg.data));
    REQUIRE(cells.size() == 1);
    TrainResult plain = train(cfg, make_gmm(cfg.data), "");
    CHECK(cells[0].modes_captured == plain.record.final_eval.hq.modes_captured);
    CHECK(cells[0].hq_percent == plain.record.final_eval.hq.hq_percent);
  }

  TEST_CASE("invalid configs are rejected") {
    TrainConfig cfg = tiny_config();
    cfg.lr_disc = 0.0;
    CHECK_THROWS_AS(train(cfg, make_gmm(cfg.data), ""), ValidationError);
    TrainConfig cfg2 = tiny_config();
    cfg2.batch_size = 0;
    CHECK_THROWS_AS(train(cfg2, make_gmm(cfg2.data), ""), ValidationError);
  }
}
