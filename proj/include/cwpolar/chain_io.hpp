#pragma once

// Line-based chain file:
//
//   fimchain 1
//   meta kind=prefix b=4 a=2
//   obs 0 1
//   state <name> [phase=k] [weight=w]
//   trans <from> <x> <y> <to> <prob>
//
// '#' starts a comment. Probabilities are fractions ("2/3") or decimals.

#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "cwpolar/error.hpp"
#include "cwpolar/fraction.hpp"
#include "cwpolar/process_model.hpp"

namespace cwpolar {

namespace detail {

inline std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  for (std::string tok; in >> tok;) out.push_back(tok);
  return out;
}

inline double parse_probability(const std::string& text) {
  if (text.find('/') != std::string::npos) {
    if (!text.empty() && text[0] == '-') return -Fraction::parse(text.substr(1)).value();
    return Fraction::parse(text).value();
  }
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::kParseError, "bad probability '" + text + "'");
}

inline ChainKind parse_kind(const std::string& s) {
  if (s == "custom") return ChainKind::kCustom;
  if (s == "prefix") return ChainKind::kPrefix;
  if (s == "condensed") return ChainKind::kCondensed;
  if (s == "mod") return ChainKind::kMod;
  if (s == "window") return ChainKind::kWindow;
  throw Error(ErrorCode::kParseError, "unknown chain kind '" + s + "'");
}

}  // namespace detail

inline FimProcess read_chain(std::istream& in) {
  std::vector<std::string> states;
  std::vector<StateTag> tags;
  std::vector<std::string> obs;
  std::vector<std::vector<std::string>> trans_rows;
  ChainMeta meta;
  bool header = false;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const auto tok = detail::split_ws(line);
    if (tok.empty()) continue;
    auto fail = [&](const std::string& msg) {
      throw Error(ErrorCode::kParseError, "line " + std::to_string(line_no) + ": " + msg);
    };
    if (!header) {
      if (tok.size() != 2 || tok[0] != "fimchain" || tok[1] != "1") fail("expected 'fimchain 1'");
      header = true;
      continue;
    }
    if (tok[0] == "meta") {
      for (std::size_t i = 1; i < tok.size(); ++i) {
        const auto eq = tok[i].find('=');
        if (eq == std::string::npos) fail("meta entries are key=value");
        const auto key = tok[i].substr(0, eq);
        const auto val = tok[i].substr(eq + 1);
        if (key == "kind") {
          meta.kind = detail::parse_kind(val);
        } else if (key == "b") {
          meta.b = std::stoi(val);
        } else if (key == "a") {
          meta.a = std::stoi(val);
        } else if (key == "alpha") {
          meta.alpha = Fraction::parse(val);
        } else if (key == "beta") {
          meta.beta = Fraction::parse(val);
        }
      }
    } else if (tok[0] == "obs") {
      obs.assign(tok.begin() + 1, tok.end());
    } else if (tok[0] == "state") {
      if (tok.size() < 2) fail("state needs a name");
      states.push_back(tok[1]);
      StateTag tag;
      for (std::size_t i = 2; i < tok.size(); ++i) {
        if (tok[i].rfind("phase=", 0) == 0) tag.phase = std::stoi(tok[i].substr(6));
        else if (tok[i].rfind("weight=", 0) == 0) tag.weight = std::stoi(tok[i].substr(7));
        else fail("unknown state attribute '" + tok[i] + "'");
      }
      tags.push_back(tag);
    } else if (tok[0] == "trans") {
      if (tok.size() != 6) fail("trans needs: from x y to prob");
      trans_rows.push_back(tok);
    } else {
      fail("unknown record '" + tok[0] + "'");
    }
  }
  if (!header) throw Error(ErrorCode::kParseError, "empty chain file");
  std::map<std::string, int> state_ix;
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (!state_ix.emplace(states[i], static_cast<int>(i)).second) {
      throw Error(ErrorCode::kParseError, "duplicate state '" + states[i] + "'");
    }
  }
  std::map<std::string, int> obs_ix;
  for (std::size_t i = 0; i < obs.size(); ++i) obs_ix.emplace(obs[i], static_cast<int>(i));
  std::vector<Transition> trans;
  for (const auto& row : trans_rows) {
    const auto from = state_ix.find(row[1]);
    const auto to = state_ix.find(row[4]);
    const auto y = obs_ix.find(row[3]);
    if (from == state_ix.end() || to == state_ix.end()) {
      throw Error(ErrorCode::kParseError, "transition names unknown state");
    }
    if (y == obs_ix.end()) throw Error(ErrorCode::kParseError, "transition names unknown observation '" + row[3] + "'");
    if (row[2] != "0" && row[2] != "1") throw Error(ErrorCode::kParseError, "input bit must be 0 or 1");
    const double p = detail::parse_probability(row[5]);
    std::string text;
    if (row[5].find('/') != std::string::npos) text = Fraction::parse(row[5]).str();
    trans.push_back({from->second, row[2] == "1" ? 1 : 0, y->second, to->second, p, text});
  }
  return FimProcess(std::move(states), std::move(obs), std::move(trans), std::move(tags), meta);
}

inline FimProcess load_chain(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kParseError, "cannot open chain file '" + path + "'");
  return read_chain(in);
}

inline void write_chain(std::ostream& out, const FimProcess& proc) {
  const auto& meta = proc.meta();
  out << "fimchain 1\n";
  out << "meta kind=" << chain_kind_name(meta.kind);
  if (meta.kind != ChainKind::kCustom) out << " b=" << meta.b;
  if (meta.kind == ChainKind::kPrefix || meta.kind == ChainKind::kCondensed || meta.kind == ChainKind::kMod) {
    out << " a=" << meta.a;
  }
  if (meta.kind == ChainKind::kWindow) out << " alpha=" << meta.alpha.str() << " beta=" << meta.beta.str();
  out << "\nobs";
  for (const auto& o : proc.observations()) out << ' ' << o;
  out << '\n';
  for (std::size_t s = 0; s < proc.num_states(); ++s) {
    out << "state " << proc.states()[s];
    const auto& tag = proc.tags()[s];
    if (tag.phase) out << " phase=" << *tag.phase;
    if (tag.weight) out << " weight=" << *tag.weight;
    out << '\n';
  }
  std::ostringstream num;
  num.precision(17);
  for (const auto& t : proc.transitions()) {
    out << "trans " << proc.state_name(t.from) << ' ' << t.x << ' ' << proc.observations()[static_cast<std::size_t>(t.y)]
        << ' ' << proc.state_name(t.to) << ' ';
    if (!t.prob_text.empty()) {
      out << t.prob_text;
    } else {
      num.str("");
      num << t.prob;
      out << num.str();
    }
    out << '\n';
  }
}

inline std::string chain_to_string(const FimProcess& proc) {
  std::ostringstream out;
  write_chain(out, proc);
  return out.str();
}

}  // namespace cwpolar
