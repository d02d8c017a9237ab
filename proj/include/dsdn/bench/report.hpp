// Copyright 2026 The dsdn Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// CSV files and the console summary. Lines starting with '#' carry the run
// parameters; the first other line is the column header.

#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "dsdn/bench/experiments.hpp"

namespace dsdn::bench {

namespace fs = std::filesystem;

class ReportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::ofstream open_csv(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw ReportError("cannot write " + path.string());
  out << std::fixed << std::setprecision(3);
  return out;
}

inline void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw ReportError("cannot create output directory " + dir.string());
}

inline std::string modes_list(const std::vector<Mode>& modes) {
  std::string s;
  for (auto m : modes) {
    if (!s.empty()) s += ';';
    s += core::to_string(m);
  }
  return s;
}

inline void write_rt_params(std::ostream& out, const RtConfig& c) {
  out << "# experiment=rt topology=" << c.topology << " count=" << c.count << " warmup=" << c.warmup
      << " modes=" << modes_list(c.modes) << '\n'
      << "# ping_interval_us=" << c.interval.count() << " payload_bytes=" << c.payload_bytes
      << " timeout_us=" << c.timeout.count() << " link_latency_us=" << c.link_latency.count()
      << " broker_poll_us=" << c.broker_poll.count() << " forwarding=packet_out_only\n";
}

inline void write_tp_params(std::ostream& out, const TpConfig& c) {
  out << "# experiment=tp topology=" << c.topology << " duration_s=" << c.duration.count()
      << " modes=" << modes_list(c.modes) << " install=" << services::to_string(c.channel) << '\n'
      << "# hard_timeout_s=" << c.hard_timeout_s << " segment_bytes=" << c.segment_bytes
      << " link_latency_us=" << c.link_latency.count() << " broker_poll_us=" << c.broker_poll.count() << '\n';
}

inline void write_event_header(std::ostream& out) {
  out << "mode,seq,ts_micros,kind,dpid,port,ethertype,op,rule_id,detail\n";
}

inline std::string_view op_name(FlowRuleOp op) {
  switch (op) {
    case FlowRuleOp::Added: return "ADDED";
    case FlowRuleOp::Removed: return "REMOVED";
    case FlowRuleOp::Updated: return "UPDATED";
  }
  return "?";
}

/// One row per event; columns that do not apply to a kind are empty.
inline void write_event_row(std::ostream& out, std::string_view label, const Event& e) {
  out << label << ',' << e.seq << ',' << e.ts_micros << ',' << to_string(e.kind()) << ',';
  if (auto* p = e.as<PacketException>()) {
    out << p->dpid << ',' << p->in_port << ",0x" << std::hex << std::setw(4) << std::setfill('0')
        << p->frame.ethertype << std::dec << std::setfill(' ') << ",,," << p->frame.src.to_string() << '>'
        << p->frame.dst.to_string();
  } else if (auto* l = e.as<TopologyLink>()) {
    out << l->src_dpid << ',' << l->src_port << ",," << (l->up ? "UP" : "DOWN") << ",," << l->dst_dpid << ':'
        << l->dst_port;
  } else if (auto* d = e.as<TopologyDevice>()) {
    out << d->dpid << ",,," << (d->up ? "UP" : "DOWN") << ",,";
  } else if (auto* pt = e.as<TopologyPort>()) {
    out << pt->dpid << ',' << pt->port << ",," << (pt->up ? "UP" : "DOWN") << ",,";
  } else if (auto* f = e.as<FlowRuleEvent>()) {
    out << f->dpid << ",,," << op_name(f->op) << ',' << f->rule.rule_id << ",timeout_s=" << f->rule.hard_timeout_s;
  }
  out << '\n';
}

inline void write_rt(const RtResult& r, const fs::path& dir) {
  if (r.modes.empty()) throw ReportError("no results to write");
  ensure_dir(dir);
  {
    auto out = open_csv(dir / "rt_raw.csv");
    write_rt_params(out, r.config);
    out << "mode,run_index,rtt_micros,lost\n";
    for (const auto& m : r.modes) {
      for (std::size_t i = 0; i < m.samples.size(); ++i) {
        const auto& s = m.samples[i];
        out << core::to_string(m.mode) << ',' << i << ',' << (s.lost ? 0 : s.rtt_micros) << ',' << (s.lost ? 1 : 0)
            << '\n';
      }
    }
  }
  {
    auto out = open_csv(dir / "rt_summary.csv");
    write_rt_params(out, r.config);
    out << "mode,n,mean_micros,median_micros,p95_micros,p99_micros,min_micros,max_micros,stddev_micros,lost,"
           "hops,event_count_mismatches,valid\n";
    for (const auto& m : r.modes) {
      const auto& s = m.summary;
      out << core::to_string(m.mode) << ',' << s.n << ',' << s.mean << ',' << s.median << ',' << s.p95 << ','
          << s.p99 << ',' << s.min << ',' << s.max << ',' << s.stddev << ',' << s.lost << ',' << m.hops << ','
          << m.event_count_mismatches << ',' << (m.valid ? 1 : 0) << '\n';
    }
  }
  {
    auto out = open_csv(dir / "rt_compare.csv");
    write_rt_params(out, r.config);
    out << "faster,slower,mean_gap_micros,median_gap_micros,blocks,faster_lower_blocks,ties,p_value,significant,"
           "flagged\n";
    for (const auto& c : r.comparisons) {
      out << core::to_string(c.faster) << ',' << core::to_string(c.slower) << ',' << c.mean_gap << ','
          << c.median_gap << ',' << c.sign.blocks << ',' << c.sign.a_lower << ',' << c.sign.ties << ','
          << std::scientific << c.sign.p_value << std::fixed << ',' << (c.significant ? 1 : 0) << ','
          << (c.flagged ? 1 : 0) << '\n';
    }
  }
  {
    auto out = open_csv(dir / "rt_events.csv");
    write_rt_params(out, r.config);
    write_event_header(out);
    for (const auto& m : r.modes) {
      for (const auto& e : m.event_log) write_event_row(out, core::to_string(m.mode), e);
    }
  }
}

inline void write_tp(const TpResult& r, const fs::path& dir) {
  if (r.runs.empty()) throw ReportError("no results to write");
  ensure_dir(dir);
  {
    auto out = open_csv(dir / "tp_raw.csv");
    write_tp_params(out, r.config);
    out << "mode,install,n_conns,conn,acked_bytes,acked_segments,retransmits,goodput_bytes_per_s\n";
    for (const auto& run : r.runs) {
      for (const auto& c : run.report.conns) {
        out << core::to_string(run.mode) << ',' << services::to_string(run.channel) << ',' << run.n_conns << ','
            << c.conn << ',' << c.acked_bytes << ',' << c.acked_segments << ',' << c.retransmits << ','
            << c.goodput_bytes_per_s << '\n';
      }
    }
  }
  {
    auto out = open_csv(dir / "tp_summary.csv");
    write_tp_params(out, r.config);
    out << "mode,install,n_conns,duration_s,aggregate_bytes_per_s,expiry_cycles,rule_removed_events,"
           "rule_added_events,valid\n";
    for (const auto& run : r.runs) {
      out << core::to_string(run.mode) << ',' << services::to_string(run.channel) << ',' << run.n_conns << ','
          << run.report.duration_s << ',' << run.report.aggregate_bytes_per_s << ',' << run.expiry_cycles << ','
          << run.removed_events << ',' << run.added_events << ',' << (run.valid ? 1 : 0) << '\n';
    }
  }
  {
    auto out = open_csv(dir / "tp_events.csv");
    write_tp_params(out, r.config);
    write_event_header(out);
    for (const auto& run : r.runs) {
      auto label = std::string(core::to_string(run.mode)) + "/n" + std::to_string(run.n_conns);
      for (const auto& e : run.event_log) write_event_row(out, label, e);
    }
  }
}

inline void print_rt(std::ostream& os, const RtResult& r) {
  os << std::fixed << std::setprecision(1);
  os << "response time, " << r.config.count << " pings on " << r.config.topology << " (micros)\n";
  os << std::left << std::setw(10) << "mode" << std::right << std::setw(10) << "mean" << std::setw(10) << "median"
     << std::setw(10) << "p95" << std::setw(10) << "p99" << std::setw(10) << "stddev" << std::setw(7) << "lost"
     << "  status\n";
  for (const auto& m : r.modes) {
    const auto& s = m.summary;
    os << std::left << std::setw(10) << core::to_string(m.mode) << std::right << std::setw(10) << s.mean
       << std::setw(10) << s.median << std::setw(10) << s.p95 << std::setw(10) << s.p99 << std::setw(10)
       << s.stddev << std::setw(7) << s.lost << "  " << (m.valid ? "ok" : "INVALID");
    for (const auto& p : m.problems) os << "; " << p;
    os << '\n';
  }
  for (const auto& c : r.comparisons) {
    os << core::to_string(c.faster) << " < " << core::to_string(c.slower) << ": mean gap " << c.mean_gap
       << ", median gap " << c.median_gap << ", blocks " << c.sign.a_lower << '/' << c.sign.blocks << ", p="
       << std::scientific << std::setprecision(2) << c.sign.p_value << std::fixed << std::setprecision(1)
       << (c.holds() ? " holds" : " does not hold") << (c.flagged ? " (flagged: broker poll below floor)" : "")
       << '\n';
  }
}

inline void print_tp(std::ostream& os, const TpResult& r) {
  os << std::fixed << std::setprecision(1);
  os << "throughput, " << r.config.duration.count() << " s on " << r.config.topology
     << ", install=" << services::to_string(r.config.channel) << " (MB/s)\n";
  if (auto w = r.config.churn_warning(); !w.empty()) os << "warning: " << w << '\n';
  for (const auto& run : r.runs) {
    os << std::left << std::setw(10) << core::to_string(run.mode) << "n=" << std::setw(3) << run.n_conns
       << std::right << std::setw(10) << std::setprecision(3) << run.report.aggregate_bytes_per_s / 1e6
       << std::setprecision(1) << "  expiry cycles " << run.expiry_cycles << "  " << (run.valid ? "ok" : "INVALID");
    for (const auto& p : run.problems) os << "; " << p;
    os << '\n';
  }
}

}  // namespace dsdn::bench
