#pragma once

#include <string>
#include <vector>

#include "safedmp/safe_exec.h"
#include "safedmp/trajectory.h"

namespace safedmp {

// Demonstration CSV: header "t,x,y" or "t,x,y,z", one sample per row. Blank
// lines are skipped. Malformed input throws kParse naming the line number.
TimedTrajectory ParseDemoCsv(const std::string& text);
TimedTrajectory ReadDemoCsv(const std::string& path);
std::string FormatDemoCsv(const TimedTrajectory& traj);

// Execution log: t, xn_i, xs_i, xd_i, xm_i, tau, z, min_clearance with
// 17 significant digits, so parsing restores every logged field exactly.
std::string FormatLogCsv(const std::vector<StepRecord>& records);
// x_target and u_stt are not part of the file and come back empty.
std::vector<StepRecord> ParseLogCsv(const std::string& text);

// 17 significant digits, "inf"/"-inf"/"nan" for non-finite values.
std::string FormatDouble(double value);

std::string ReadTextFile(const std::string& path);
void WriteTextFile(const std::string& path, const std::string& contents);

}  // namespace safedmp
