// SPDX-License-Identifier: Apache-2.0
// stk <parse|schedule|insert|translate|bist|all> --manifest <path> --out <dir> ...
// Every option can also come from an STK_* environment variable (STK_PINS,
// STK_SEED, ...); a flag on the command line wins.
#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "stk/flow.hpp"

int main(int argc, char** argv)
{
    CLI::App app{"SOC test integration flow"};
    app.require_subcommand(1, 1);

    stk::FlowConfig cfg;
    std::string manifest, out = "stk_out", march;
    std::optional<std::size_t> pins;
    std::optional<double> power;

    for (auto st : {stk::FlowStage::parse, stk::FlowStage::schedule, stk::FlowStage::insert, stk::FlowStage::translate,
                    stk::FlowStage::bist, stk::FlowStage::all}) {
        static const std::map<stk::FlowStage, std::string> help = {
            {stk::FlowStage::parse, "read and validate the manifest and core files"},
            {stk::FlowStage::schedule, "parse, wrapper tables, session schedule"},
            {stk::FlowStage::insert, "... and wrapper/controller insertion into the netlist"},
            {stk::FlowStage::translate, "... and chip-level vector files"},
            {stk::FlowStage::bist, "parse and the memory BIST fabric with coverage"},
            {stk::FlowStage::all, "every stage"}};
        auto* sub = app.add_subcommand(std::string(stk::to_string(st)), help.at(st));
        sub->callback([&cfg, st] { cfg.stage = st; });
        sub->add_option("--manifest", manifest, "SOC manifest")->required()->envname("STK_MANIFEST");
        sub->add_option("--out", out, "output directory")->envname("STK_OUT")->capture_default_str();
        sub->add_option("--pins", pins, "chip pin budget (manifest value if unset)")->envname("STK_PINS");
        sub->add_option("--power", power, "power cap (manifest value if unset)")->envname("STK_POWER");
        sub->add_option("--wbr-in-chains", cfg.wbr_in_chains, "boundary cells in the wrapper chains")
            ->envname("STK_WBR_IN_CHAINS")
            ->capture_default_str();
        sub->add_option("--share-se", cfg.share_se, "one shared scan-enable pin")
            ->envname("STK_SHARE_SE")
            ->capture_default_str();
        sub->add_option("--merge-domains", cfg.allow_domain_merging, "allow chains of different clock domains to share a wrapper chain")
            ->envname("STK_MERGE_DOMAINS")
            ->capture_default_str();
        sub->add_option("--seed", cfg.seed, "synthetic vector seed")->envname("STK_SEED")->capture_default_str();
        sub->add_option("--march", march, "march algorithm file (March C- if unset)")->envname("STK_MARCH");
        sub->add_flag("--schedule-bist", cfg.schedule_bist, "schedule the memory BIST as a test entity")
            ->envname("STK_SCHEDULE_BIST");
        sub->add_option("--table-width", cfg.table_width, "widest TAM in the wrapper tables")
            ->envname("STK_TABLE_WIDTH")
            ->capture_default_str();
    }

    CLI11_PARSE(app, argc, argv);

    cfg.manifest = manifest;
    cfg.out = out;
    cfg.pins = pins;
    cfg.power = power;
    if (!march.empty())
        cfg.march = march;

    auto r = stk::run_flow(cfg);
    if (!r.failed_stage.empty())
        std::cerr << "stk: " << r.failed_stage << ": " << r.message << "\n";
    for (const auto& v : r.violations)
        std::cerr << "stk: " << v << "\n";
    for (const auto& p : r.written)
        std::cout << (cfg.out / p).string() << "\n";
    return r.exit_code;
}
