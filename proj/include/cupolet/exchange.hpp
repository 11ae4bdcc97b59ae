#pragma once

#include <fstream>
#include <map>
#include <string>
#include <string_view>

#include "cupolet/config.hpp"
#include "cupolet/errors.hpp"

namespace cupolet {

/// Transform from visitation words to emitted words. The emitted word of one
/// system is the control stream of its partner, so the exchange function is
/// the medium the entanglement lives in. `lookup` carries an explicit word
/// map for exchanges whose closed form is not modeled here.
struct ExchangeFunction {
    enum class Kind { identity, bitwise_not, run_decrement, lookup };

    Kind kind = Kind::identity;
    std::map<std::string, std::string> table;  // lookup kind only
    std::string label = "identity";

    static ExchangeFunction identity() { return ExchangeFunction{}; }

    static ExchangeFunction bitwise_not() {
        ExchangeFunction f;
        f.kind = Kind::bitwise_not;
        f.label = "not";
        return f;
    }

    static ExchangeFunction run_decrement() {
        ExchangeFunction f;
        f.kind = Kind::run_decrement;
        f.label = "rundec";
        return f;
    }

    static ExchangeFunction lookup(std::map<std::string, std::string> entries,
                                   std::string label = "lookup") {
        ExchangeFunction f;
        f.kind = Kind::lookup;
        f.table = std::move(entries);
        f.label = std::move(label);
        return f;
    }

    /// Loads `visitation<TAB>emitted` lines.
    static ExchangeFunction lookup_from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw FormatError("cannot open lookup table: " + path);
        std::map<std::string, std::string> entries;
        std::string line;
        while (std::getline(in, line)) {
            std::string_view v = trim(line);
            if (v.empty() || v.front() == '#') continue;
            auto tab = v.find('\t');
            if (tab == std::string_view::npos)
                throw FormatError("lookup line missing tab separator: '" + line + "'");
            entries.emplace(trim(v.substr(0, tab)), trim(v.substr(tab + 1)));
        }
        return lookup(std::move(entries), "lookup:" + path);
    }

    /// Parses the CLI selector: identity | not | rundec | lookup:<path>.
    static ExchangeFunction parse(std::string_view spec) {
        if (spec == "identity") return identity();
        if (spec == "not") return bitwise_not();
        if (spec == "rundec") return run_decrement();
        if (spec.rfind("lookup:", 0) == 0)
            return lookup_from_file(std::string(spec.substr(7)));
        throw FormatError("unknown exchange kind: '" + std::string(spec) + "'");
    }
};

/// Applies the exchange to one visitation word.
inline std::string emit(const ExchangeFunction& f, const std::string& visitation) {
    if (visitation.empty()) throw FormatError("visitation word must be non-empty");
    switch (f.kind) {
        case ExchangeFunction::Kind::identity:
            return visitation;
        case ExchangeFunction::Kind::bitwise_not: {
            std::string out = visitation;
            for (char& c : out) c = c == '0' ? '1' : '0';
            return out;
        }
        case ExchangeFunction::Kind::run_decrement: {
            // Every maximal run of identical bits shrinks by one symbol;
            // runs of length 1 are kept so the run structure survives.
            std::string out;
            out.reserve(visitation.size());
            std::size_t i = 0;
            while (i < visitation.size()) {
                std::size_t j = i;
                while (j < visitation.size() && visitation[j] == visitation[i]) ++j;
                const std::size_t run = j - i;
                out.append(run == 1 ? 1 : run - 1, visitation[i]);
                i = j;
            }
            if (out.empty()) throw EmptyOutput("run decrement emptied the word");
            return out;
        }
        case ExchangeFunction::Kind::lookup: {
            auto it = f.table.find(visitation);
            if (it == f.table.end())
                throw LookupMiss("no lookup entry for visitation word " + visitation);
            return it->second;
        }
    }
    throw FormatError("unreachable exchange kind");
}

}  // namespace cupolet
