// Thin bindings over the qdesigndb CLI for notebook/JS environments.
//
// Every call spawns the native command-line tool and parses its JSON
// output; numbers cross the boundary as shortest round-trip decimals, so
// values here are bit-identical to what the native code computed. No
// numerics happen on this side.

import { spawnSync } from "node:child_process";

/** Target keys accepted by {@link bindQuery}. */
const TARGET_KEYS = ["f_q", "alpha", "f_r", "kappa", "g"] as const;
type TargetKey = (typeof TARGET_KEYS)[number];

export type TargetMapping = Partial<Record<TargetKey, number>> & {
  /** optional per-parameter weight overrides */
  weights?: Partial<Record<TargetKey, number>>;
};

export interface HamiltonianParams {
  f_q: number;
  alpha: number;
  f_r: number;
  kappa: number;
  g: number;
}

export interface RankedDesign {
  qubit_id: string;
  resonator_id: string;
  coupler_id: string | null;
  cost: number;
  params: HamiltonianParams;
}

export interface ParameterMatch {
  qubit_id: string;
  resonator_id: string;
  coupler_id: string | null;
  value: number;
  abs_error: number;
}

export interface QueryResult {
  E_J: number;
  ranked: RankedDesign[];
  per_parameter: Record<string, ParameterMatch[]>;
  closest_validated: {
    id: string;
    cost: number;
    measured: HamiltonianParams;
  } | null;
  stats: { candidates_scanned: number; skipped: number };
}

/** Error from the native side, with its exit code and stderr embedded. */
export class BindingsError extends Error {
  constructor(
    message: string,
    public readonly exitCode: number | null = null,
    public readonly stderr: string = "",
  ) {
    super(stderr ? `${message}: ${stderr.trim()}` : message);
    this.name = "BindingsError";
  }
}

export interface BoundSession {
  readonly storePath: string;
  /** set by {@link closeSession}; every call on a closed session throws */
  closed: boolean;
}

function pythonArgv(): string[] {
  const override = process.env.QDESIGNDB_PY;
  const py = override && override.length > 0 ? override : "python3";
  return [py, "-m", "qdesigndb"];
}

function runCli(args: string[]): unknown {
  const [exe, ...prefix] = pythonArgv();
  const proc = spawnSync(exe, [...prefix, ...args], {
    encoding: "utf8",
    maxBuffer: 64 * 1024 * 1024,
  });
  if (proc.error) {
    throw new BindingsError(`failed to launch ${exe}`, null, String(proc.error));
  }
  if (proc.status !== 0) {
    throw new BindingsError(
      `native command failed (exit ${proc.status})`,
      proc.status,
      proc.stderr,
    );
  }
  try {
    return JSON.parse(proc.stdout);
  } catch (err) {
    throw new BindingsError(`unparseable native output`, proc.status, String(err));
  }
}

/** Open a session on a component-store directory (validates it loads). */
export function openSession(storePath: string): BoundSession {
  runCli(["stats", "--store", storePath]);
  return { storePath, closed: false };
}

/** Invalidate a session; subsequent calls on it throw. */
export function closeSession(session: BoundSession): void {
  session.closed = true;
}

function requireOpen(session: BoundSession): void {
  if (session.closed) {
    throw new BindingsError("session is closed");
  }
}

function kvList(pairs: Record<string, number>): string {
  return Object.entries(pairs)
    .map(([k, v]) => `${k}=${String(v)}`)
    .join(",");
}

function splitTarget(target: TargetMapping): {
  values: Record<string, number>;
  weights: Record<string, number>;
} {
  const values: Record<string, number> = {};
  const weights: Record<string, number> = {};
  for (const [key, value] of Object.entries(target)) {
    if (key === "weights") {
      for (const [wk, wv] of Object.entries(value as Record<string, number>)) {
        if (!(TARGET_KEYS as readonly string[]).includes(wk)) {
          throw new BindingsError(`unknown weight key '${wk}'`);
        }
        weights[wk] = wv as number;
      }
    } else if ((TARGET_KEYS as readonly string[]).includes(key)) {
      values[key] = value as number;
    } else {
      throw new BindingsError(`unknown target key '${key}'`);
    }
  }
  if (Object.keys(values).length === 0) {
    throw new BindingsError("target mapping has no parameter values");
  }
  return { values, weights };
}

/** Full query result, numerically identical to the CLI on the same store. */
export function bindQueryResult(
  session: BoundSession,
  target: TargetMapping,
  k: number,
): QueryResult {
  requireOpen(session);
  if (!Number.isInteger(k) || k < 1) {
    throw new BindingsError(`k must be a positive integer, got ${k}`);
  }
  const { values, weights } = splitTarget(target);
  const args = [
    "query",
    "--store",
    session.storePath,
    "--target",
    kvList(values),
    "--k",
    String(k),
  ];
  if (Object.keys(weights).length > 0) {
    args.push("--weights", kvList(weights));
  }
  return runCli(args) as QueryResult;
}

/** The k best-matching designs for a target mapping. */
export function bindQuery(
  session: BoundSession,
  target: TargetMapping,
  k: number,
): RankedDesign[] {
  return bindQueryResult(session, target, k).ranked;
}

/** Closed-form operations reachable through {@link bindPhysics}. */
export const PHYSICS_OPS = [
  "transmon_fq_alpha",
  "transmon_fq_alpha_approx",
  "find_EJ_EC",
  "charging_energy",
  "capacitance_of",
  "ej_from_ic",
  "resonator_effective_capacitance",
  "coupling_g_capacitive",
  "perturbative_shifts",
  "g_from_lamb",
  "coupled_res_freq_and_kappa",
  "flux_tuned_fq",
  "avoided_crossing_branches",
  "alpha_from_spectroscopy",
] as const;
export type PhysicsOp = (typeof PHYSICS_OPS)[number];

/**
 * Evaluate one native physics operation. Numeric arguments go in
 * `args`; string-valued ones (e.g. `mode`) in `strArgs`. Returns the
 * native result: a number, or an array for multi-valued operations.
 */
export function bindPhysics(
  name: PhysicsOp | string,
  args: Record<string, number>,
  strArgs: Record<string, string> = {},
): number | number[] {
  if (!(PHYSICS_OPS as readonly string[]).includes(name)) {
    throw new BindingsError(`unknown physics operation '${name}'`);
  }
  for (const [key, value] of Object.entries(args)) {
    if (typeof value !== "number" || !Number.isFinite(value)) {
      throw new BindingsError(`argument '${key}' must be a finite number`);
    }
  }
  const argv = ["physics", "--name", name];
  if (Object.keys(args).length > 0) {
    argv.push("--args", kvList(args));
  }
  const strList = Object.entries(strArgs)
    .map(([k, v]) => `${k}=${v}`)
    .join(",");
  if (strList.length > 0) {
    argv.push("--str-args", strList);
  }
  const payload = runCli(argv) as { result: number | number[] };
  return payload.result;
}
