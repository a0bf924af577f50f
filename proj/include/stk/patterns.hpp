// SPDX-License-Identifier: Apache-2.0
#pragma once

// Core-level patterns -> wrapper-level patterns -> chip-level cycle streams.
//
// Bit order everywhere: character 0 of a load string is shifted in first and
// ends in the cell farthest from scan-in; character 0 of an unload string is
// the first bit seen at scan-out.
//
// A scan entity's chip stream is blocked as
//   load(si) capture [shift(max(si,so)) capture] x (p-1) unload(so)
// Within a shift block, wrapper chain k takes its stimulus during the last
// si_k cycles (zeros before) and shows its previous response during the
// first so_k cycles (X after).

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "stk/core_model.hpp"
#include "stk/scheduler.hpp"
#include "stk/wrapper.hpp"

namespace stk {

// Random access to a pattern set whose patterns may be computed on demand.
class PatternSource {
public:
    virtual ~PatternSource() = default;
    virtual std::size_t count() const = 0;
    virtual Pattern at(std::size_t i) const = 0;
};

class VectorSource : public PatternSource {
public:
    explicit VectorSource(std::vector<Pattern> v) : v_(std::move(v)) {}
    std::size_t count() const override { return v_.size(); }
    Pattern at(std::size_t i) const override { return v_.at(i); }

private:
    std::vector<Pattern> v_;
};

// Reproducible pseudo-random payloads for pattern sets given by count only.
// Pattern i depends only on (seed, core name, kind, i).
class SyntheticSource : public PatternSource {
public:
    SyntheticSource(const CoreTestInfo& core, PatternKind kind, std::size_t count, std::uint64_t seed);
    std::size_t count() const override { return count_; }
    Pattern at(std::size_t i) const override;

private:
    std::vector<std::size_t> chain_lengths_;
    std::size_t pi_, po_, count_;
    bool scan_;
    std::uint64_t seed_;
};

// The core's own vectors if it carries them, synthetic ones otherwise.
std::shared_ptr<const PatternSource> core_patterns(const CoreTestInfo& core, PatternKind kind, std::uint64_t seed);

// Wrapper-level view: load/unload per wrapper chain. Input and output
// boundary values are folded into the chains when they are on the shift
// path; otherwise the core's input/output strings are passed through.
class WrapperSource : public PatternSource {
public:
    WrapperSource(const CoreTestInfo& core, WrapperConfig cfg, std::shared_ptr<const PatternSource> core_level);
    std::size_t count() const override { return core_->count(); }
    Pattern at(std::size_t i) const override;
    const WrapperConfig& config() const { return cfg_; }

private:
    CoreTestInfo core_info_;
    WrapperConfig cfg_;
    std::shared_ptr<const PatternSource> core_;
};

// Eager form; throws on a vector/chain length mismatch.
PatternSet translate_to_wrapper(const CoreTestInfo& core, const PatternSet& set, const WrapperConfig& cfg);

// Cycle-based tester stream over a fixed ordered pin list. Symbols: 0 1 Z X
// for drives, H L X for expects.
class CycleStream {
public:
    virtual ~CycleStream() = default;
    virtual const std::vector<std::string>& pins() const = 0;
    virtual std::uint64_t length() const = 0;
    // Fills `out` (resized to pins().size()) with the symbols of `cycle`.
    // Streams are cheapest when read in ascending cycle order.
    virtual void row(std::uint64_t cycle, std::string& out) const = 0;
};

// Holds everything translation needs per wrapped core.
struct TranslationMap {
    std::map<std::string, CoreTestInfo> cores;
    std::map<std::string, WrapperConfig> wrappers;
    SharingPolicy sharing;
    std::uint64_t seed = 1;
};

struct GeneratedTestFabric;
TranslationMap make_translation_map(const GeneratedTestFabric& fabric, std::uint64_t seed);

// One entity of a schedule as a chip-level stream (length = a.cycles).
std::unique_ptr<CycleStream> translate_to_chip(const Assignment& a, const TranslationMap& map);

// Stream with explicit wrapper-level patterns (tests use it with real vectors).
std::unique_ptr<CycleStream> scan_stream(const CoreTestInfo& core, std::shared_ptr<const WrapperSource> patterns,
                                         CaptureMode capture, const std::vector<std::size_t>& wires,
                                         const SharingPolicy& sharing);
std::unique_ptr<CycleStream> functional_stream(const CoreTestInfo& core, std::shared_ptr<const PatternSource> patterns,
                                               const SharingPolicy& sharing);

// Cycle-wise union: test_mode=1 and session_si=0 first, then each stream's
// pins in order. Shorter streams are X-padded. A pin may appear in several
// streams only if it is a pooled or clock pin (se, te, ref_clk); their
// symbols must agree where both are not X.
std::unique_ptr<CycleStream> merge_session_patterns(std::vector<std::unique_ptr<CycleStream>> streams);

std::unique_ptr<CycleStream> session_stream(const Session& s, const TranslationMap& map);

// Loads session `index` into the controller register (test_mode=0).
std::unique_ptr<CycleStream> session_setup_stream(std::size_t index, std::size_t sessions);

// Pin names on line 1 (space separated), then one line of symbols per cycle.
void emit_vectors(const CycleStream& s, std::ostream& out);

// Small in-memory stream, mainly for tests.
class TableStream : public CycleStream {
public:
    TableStream(std::vector<std::string> pins, std::vector<std::string> rows);
    const std::vector<std::string>& pins() const override { return pins_; }
    std::uint64_t length() const override { return rows_.size(); }
    void row(std::uint64_t cycle, std::string& out) const override { out = rows_.at(cycle); }

private:
    std::vector<std::string> pins_;
    std::vector<std::string> rows_;
};

} // namespace stk
