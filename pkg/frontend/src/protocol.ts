// Wire protocol (version 1): JSON text frames over a WebSocket.
// This module is the single source of truth for message shapes on the
// console side; everything else goes through it.

export const PROTOCOL_VERSION = 1;

export interface TelemetryRecord {
  tick: number;
  t_s: number;
  depth_m: number;
  velocity_m_s: number;
  acceleration_m_s2: number;
  fill_front: number;
  fill_rear: number;
  joint_pitch_rad: number[];
  joint_yaw_rad: number[];
  screw_speeds_rad_s: number[];
  gait: string | null;
}

export interface HelloMessage {
  type: "hello";
  version: number;
}

export interface ErrorMessage {
  type: "error";
  code: string;
  message: string;
}

export interface TelemetryMessage extends TelemetryRecord {
  type: "telemetry";
}

export type ServerMessage = HelloMessage | ErrorMessage | TelemetryMessage;

export class ProtocolError extends Error {}

const TELEMETRY_NUMBERS: (keyof TelemetryRecord)[] = [
  "tick",
  "t_s",
  "depth_m",
  "velocity_m_s",
  "acceleration_m_s2",
  "fill_front",
  "fill_rear",
];

export function parseServerMessage(raw: string): ServerMessage {
  let payload: unknown;
  try {
    payload = JSON.parse(raw);
  } catch {
    throw new ProtocolError(`not JSON: ${raw.slice(0, 80)}`);
  }
  if (typeof payload !== "object" || payload === null) {
    throw new ProtocolError("message is not an object");
  }
  const msg = payload as Record<string, unknown>;
  switch (msg.type) {
    case "hello":
      if (typeof msg.version !== "number") {
        throw new ProtocolError("hello without a numeric version");
      }
      return { type: "hello", version: msg.version };
    case "error":
      return {
        type: "error",
        code: String(msg.code ?? "unknown"),
        message: String(msg.message ?? ""),
      };
    case "telemetry": {
      for (const field of TELEMETRY_NUMBERS) {
        if (typeof msg[field] !== "number") {
          throw new ProtocolError(`telemetry missing numeric ${String(field)}`);
        }
      }
      if (!Array.isArray(msg.joint_pitch_rad) || !Array.isArray(msg.joint_yaw_rad)) {
        throw new ProtocolError("telemetry missing joint angle arrays");
      }
      return msg as unknown as TelemetryMessage;
    }
    default:
      throw new ProtocolError(`unknown message type ${String(msg.type)}`);
  }
}

export type Branch = "front" | "rear";
export type GaitMode = "screwing" | "wheeling" | "sidewinding";

export interface ValveCommand {
  type: "command";
  action: "valve";
  branch: Branch;
  open: boolean;
  upstream_gauge_pa?: number;
}

export interface GaitCommand {
  type: "command";
  action: "gait";
  mode: GaitMode;
  [param: string]: unknown;
}

export interface ScrewCommand {
  type: "command";
  action: "screw";
  speed_rad_s: number;
}

export interface ResetCommand {
  type: "command";
  action: "reset";
}

export type Command = ValveCommand | GaitCommand | ScrewCommand | ResetCommand;

export function valveCommand(
  branch: Branch,
  open: boolean,
  upstreamGaugePa?: number,
): ValveCommand {
  const cmd: ValveCommand = { type: "command", action: "valve", branch, open };
  if (upstreamGaugePa !== undefined) {
    cmd.upstream_gauge_pa = upstreamGaugePa;
  }
  return cmd;
}

export function sidewindingCommand(
  amplitudePitchRad: number,
  amplitudeYawRad: number,
  frequencyHz: number,
  phaseLagRad: number,
): GaitCommand {
  return {
    type: "command",
    action: "gait",
    mode: "sidewinding",
    amplitude_pitch_rad: amplitudePitchRad,
    amplitude_yaw_rad: amplitudeYawRad,
    frequency_hz: frequencyHz,
    phase_lag_rad: phaseLagRad,
  };
}

export function screwingCommand(turnRadiusM: number | null, screwSpeedRadS: number): GaitCommand {
  const cmd: GaitCommand = {
    type: "command",
    action: "gait",
    mode: "screwing",
    screw_speed_rad_s: screwSpeedRadS,
  };
  if (turnRadiusM !== null) {
    cmd.turn_radius_m = turnRadiusM;
  }
  return cmd;
}

export function wheelingCommand(groundSpeedMS: number): GaitCommand {
  return { type: "command", action: "gait", mode: "wheeling", ground_speed_m_s: groundSpeedMS };
}

export function screwCommand(speedRadS: number): ScrewCommand {
  return { type: "command", action: "screw", speed_rad_s: speedRadS };
}

export function resetCommand(): ResetCommand {
  return { type: "command", action: "reset" };
}

export function encodeCommand(command: Command): string {
  return JSON.stringify(command);
}

export const PSI_TO_PA = 6894.757293168361;

export function psiToPa(psi: number): number {
  return psi * PSI_TO_PA;
}
