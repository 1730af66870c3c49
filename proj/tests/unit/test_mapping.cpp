// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "fixtures.hpp"
#include "pimdse/errors.hpp"
#include "pimdse/mapping.hpp"

using namespace pimdse;

namespace {

int ceil_div(long long a, long long b) { return static_cast<int>((a + b - 1) / b); }

}  // namespace

TEST(MapFc, TilingExamples) {
  const MappedOperator a = map_fc(16, 16, 4, ReRAMConfig{1, 2, 16, 4});
  EXPECT_EQ(a.row_tiles, 1);
  EXPECT_EQ(a.planes, 2);
  EXPECT_EQ(a.col_tiles, 4);

  const MappedOperator b = map_fc(1, 1, 8, ReRAMConfig{1, 1, 16, 4});
  EXPECT_EQ(b.row_tiles, 1);
  EXPECT_EQ(b.col_tiles, ceil_div(8 * 2, 16));

  EXPECT_EQ(map_fc(1024, 4, 8, ReRAMConfig{1, 1, 64, 4}).row_tiles, 16);
  EXPECT_THROW(map_fc(0, 4, 8, ReRAMConfig{}), ShapeMismatch);
}

TEST(MapEfc, TilingAndPasses) {
  const MappedOperator e = map_efc(26, 8, 16, 8, ReRAMConfig{1, 1, 16, 4});
  EXPECT_EQ(e.row_tiles, 2);
  EXPECT_EQ(e.passes, 16);
  EXPECT_EQ(map_efc(16, 16, 16, 4, ReRAMConfig{1, 2, 16, 4}).planes, 2);
}

TEST(MapDp, Geometry) {
  const DPGeometry g32 = dp_geometry(32);
  EXPECT_EQ(g32.k_sparse, 8);
  EXPECT_EQ(g32.merged_rows, 9);
  EXPECT_EQ(g32.pair_count, 36);
  const DPGeometry g16 = dp_geometry(16);
  EXPECT_EQ(g16.k_sparse, 6);
  EXPECT_EQ(g16.merged_rows, 7);
  EXPECT_EQ(g16.pair_count, 21);
  for (int d : {16, 32, 64, 128, 256, 512, 768, 1024}) {
    const DPGeometry g = dp_geometry(d);
    EXPECT_EQ(g.pair_count, g.merged_rows * (g.merged_rows - 1) / 2);
    EXPECT_LE(std::abs(g.k_sparse * g.k_sparse - 2 * d), 2 * g.k_sparse + 1);
  }
}

TEST(MapDp, ComponentsAndEngine) {
  const ReRAMConfig r{2, 2, 32, 8};
  const MappedOperator dp = map_dp(32, 16, 26, 4, r, 100);
  ASSERT_EQ(dp.components.size(), 3u);
  EXPECT_EQ(dp.engine, Engine::DP);
  EXPECT_EQ(dp.in_dim, 16);
  EXPECT_EQ(dp.out_dim, 9);
  EXPECT_EQ(dp.programming_vectors, 9);
  EXPECT_TRUE(dp.runtime_programmed);
  EXPECT_EQ(dp.components[0].in_dim, 100);
  EXPECT_EQ(dp.components[0].out_dim, 16);
  EXPECT_EQ(dp.components[1].in_dim, 26);
  EXPECT_EQ(dp.components[1].out_dim, 8);
  EXPECT_EQ(dp.components[2].in_dim, 36);
  EXPECT_EQ(dp.components[2].out_dim, 32);
  EXPECT_EQ(dp.total_tiles(), dp.own_tiles() + dp.components[0].total_tiles() +
                                  dp.components[1].total_tiles() + dp.components[2].total_tiles());
}

TEST(MapFm, EngineShape) {
  const MappedOperator fm = map_fm(26, 16, 8, ReRAMConfig{1, 1, 16, 4}, 64);
  EXPECT_EQ(fm.engine, Engine::FM);
  EXPECT_EQ(fm.in_dim, 16);
  EXPECT_EQ(fm.out_dim, 26);
  EXPECT_EQ(fm.programming_vectors, 26);
  ASSERT_EQ(fm.components.size(), 1u);
  EXPECT_EQ(fm.components[0].in_dim, 16);
  EXPECT_EQ(fm.components[0].out_dim, 64);
  EXPECT_THROW(map_fm(0, 16, 8, ReRAMConfig{}), ShapeMismatch);
  EXPECT_EQ(map_fm(1, 16, 8, ReRAMConfig{1, 1, 16, 4}).programming_vectors, 1);
  EXPECT_EQ(fm_sum_bits(3, 8), 9);
  EXPECT_EQ(fm_sum_bits(26, 8), 12);
}

TEST(MapModel, MinimalPointUsesOnlyMvm) {
  const MappedModel mm = map_model(pimdse::testing::minimal_point());
  EXPECT_GE(mm.tile_plan.mvm, 1);
  EXPECT_EQ(mm.tile_plan.dp, 0);
  EXPECT_EQ(mm.tile_plan.fm, 0);
  EXPECT_GT(mm.tile_plan.memory, 0);
  EXPECT_EQ(mm.operators().size(), 15u);
  EXPECT_EQ(mm.operators().back()->id, "final.FC");
}

TEST(MapModel, DpAndFmBlocksAllocateEngines) {
  DesignPoint p = pimdse::testing::minimal_point();
  p.model.blocks[1].dense_ops.push_back({OperatorKind::DP, 8});
  p.model.blocks[4].dense_ops.push_back({OperatorKind::FM, 4});
  canonicalize(p);
  const MappedModel mm = map_model(p);
  EXPECT_GE(mm.tile_plan.dp, 1);
  EXPECT_GE(mm.tile_plan.fm, 1);
}

TEST(MapModel, TilePlanIsSumOfOperatorTiles) {
  for (std::uint64_t s = 0; s < 200; ++s) {
    const MappedModel mm = map_model(sample_random(s));
    long long mvm = 0, dp = 0, fm = 0, all = 0;
    std::vector<const MappedOperator*> stack;
    for (const MappedOperator* op : mm.operators()) {
      all += op->total_tiles();
      stack.push_back(op);
    }
    while (!stack.empty()) {
      const MappedOperator* op = stack.back();
      stack.pop_back();
      const long long t = static_cast<long long>(op->row_tiles) * op->col_tiles;
      (op->engine == Engine::MVM ? mvm : op->engine == Engine::DP ? dp : fm) += t;
      for (const auto& c : op->components) stack.push_back(&c);
    }
    ASSERT_EQ(mm.tile_plan.mvm, mvm);
    ASSERT_EQ(mm.tile_plan.dp, dp);
    ASSERT_EQ(mm.tile_plan.fm, fm);
    ASSERT_EQ(mm.tile_plan.compute(), all);
  }
}

TEST(MapModel, OperatorShapesFollowInputs) {
  for (std::uint64_t s = 0; s < 100; ++s) {
    const DesignPoint p = sample_random(s);
    const MappedModel mm = map_model(p);
    for (std::size_t b = 0; b < mm.blocks.size(); ++b) {
      const BlockConfig& bc = p.model.blocks[b];
      const int d_in = dense_input_width(p.model, bc);
      const int s_rows = sparse_input_rows(p.model, bc);
      for (const MappedOperator& op : mm.blocks[b].ops) {
        switch (op.kind) {
          case OperatorKind::FC:
            ASSERT_EQ(op.in_dim, d_in);
            ASSERT_EQ(op.out_dim, bc.dim_d);
            break;
          case OperatorKind::DSI:
            ASSERT_EQ(op.in_dim, d_in);
            ASSERT_EQ(op.out_dim, 26 * bc.dim_s);
            break;
          case OperatorKind::EFC:
            ASSERT_EQ(op.in_dim, s_rows);
            ASSERT_EQ(op.out_dim, 26);
            ASSERT_EQ(op.passes, bc.dim_s);
            break;
          case OperatorKind::DP:
            ASSERT_EQ(op.components[0].in_dim, d_in);
            ASSERT_EQ(op.components[1].in_dim, s_rows);
            break;
          case OperatorKind::FM:
            ASSERT_EQ(op.out_dim, s_rows);
            break;
        }
      }
    }
  }
}

TEST(MapModel, TopologyIsAcyclicAndComplete) {
  const MappedModel mm = map_model(sample_random(42));
  std::set<std::string> seen;
  std::map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < mm.topology.nodes.size(); ++i) pos[mm.topology.nodes[i]] = i;
  ASSERT_EQ(pos.size(), mm.topology.nodes.size());
  for (const auto& [src, dst] : mm.topology.edges) {
    ASSERT_TRUE(pos.count(src)) << src;
    ASSERT_TRUE(pos.count(dst)) << dst;
    EXPECT_LT(pos[src], pos[dst]) << src << " -> " << dst;
  }
  for (const MappedOperator* op : mm.operators()) EXPECT_TRUE(pos.count(op->id)) << op->id;
}

TEST(MapModel, InvalidPointRejected) {
  DesignPoint p = pimdse::testing::minimal_point();
  p.model.blocks[0].dim_d = 17;
  canonicalize(p);
  EXPECT_THROW(map_model(p), ValidationError);
  EXPECT_NO_THROW(map_model_unchecked(p));
}

TEST(MapModel, JsonListsEveryOperator) {
  const MappedModel mm = map_model(sample_random(7));
  const auto j = to_json(mm);
  EXPECT_EQ(j["point_id"], mm.point_id);
  EXPECT_EQ(j.dump(), to_json(map_model(sample_random(7))).dump());
}

TEST(MemoryTiles, CeilOfBits) {
  ModelConfig m;
  m.num_sparse_features = 2;
  m.embedding_rows = 10;
  m.embedding_dim = 4;
  // 2 * 10 * 4 * 8 = 640 bits over 16 * 16 * 1 = 256 per tile
  EXPECT_EQ(memory_tiles(m, ReRAMConfig{1, 1, 16, 4}), 3);
  EXPECT_EQ(memory_tiles(m, ReRAMConfig{1, 2, 16, 4}), 2);
}
