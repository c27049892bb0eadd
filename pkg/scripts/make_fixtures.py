#!/usr/bin/env python3
"""Regenerates the bundled FrostyGoop-style fixture.

Solves the two free link parameters so the goal posteriors land exactly on
the target (P(attack), P(impact)) pair, then freezes the attack tree,
node parameters, narration and threat-model documents under
src/cpsrisk/fixtures/frostygoop/.
"""
import json
import math
import struct
import zlib
from pathlib import Path

FIXDIR = Path(__file__).resolve().parents[1] / "src" / "cpsrisk" / "fixtures" / "frostygoop"

P_ATTACK = 0.3404
P_IMPACT = 0.6204
V_EXPOSURE = 0.4982
CVSS_VECTOR = "AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:H/A:N"

# two symmetric branches U -> V -> A -> H -> G
# X_h = 1 - sqrt(1 - P_IMPACT)        (hazard severe_impact = 1, goal link 1)
# a   = X_h / V_EXPOSURE              (asset link)
# g   : 1 - (1 - g*X_h)^2 = P_ATTACK  (goal link)
x_h = 1.0 - math.sqrt(1.0 - P_IMPACT)
a_link = x_h / V_EXPOSURE
g_link = (1.0 - math.sqrt(1.0 - P_ATTACK)) / x_h

tree = {
    "nodes": [
        {
            "id": "root",
            "label": "[G01] Disrupt municipal heating operations",
            "children": [
                {
                    "id": "haz1",
                    "label": "[H20] Full compromise of heating control system",
                    "children": [
                        {
                            "id": "asset1",
                            "label": "[A02] Wireless field devices (sensors/actuators)",
                            "children": [
                                {
                                    "id": "vul1",
                                    "label": "[V05] Exploit weak HMI authentication or session hijacking",
                                    "children": [
                                        {"id": "attacker", "label": "[U01] Attacker"}
                                    ],
                                }
                            ],
                        }
                    ],
                },
                {
                    "id": "haz2",
                    "label": "[H21] Loss of district heat distribution",
                    "children": [
                        {
                            "id": "asset2",
                            "label": "[A03] ENCO heating control server",
                            "children": [
                                {
                                    "id": "vul2",
                                    "label": "[V06] Unauthenticated Modbus TCP command interface",
                                    "children": [
                                        {"id": "attacker", "label": "[U01] Attacker"}
                                    ],
                                }
                            ],
                        }
                    ],
                },
            ],
        }
    ]
}

params = {
    "root": {"exposure": g_link, "severe_impact": 1.0},
    "haz1": {"exposure": 1.0, "severe_impact": 1.0},
    "haz2": {"exposure": 1.0, "severe_impact": 1.0},
    "asset1": {"exposure": a_link, "severe_impact": 0.0159},
    "asset2": {"exposure": a_link, "severe_impact": 0.0159},
    "vul1": {"exposure": V_EXPOSURE, "severe_impact": 0.45,
             "cvss_vector": CVSS_VECTOR},
    "vul2": {"exposure": V_EXPOSURE, "severe_impact": 0.45},
}

NARRATION = """\
Attacker or Attack-Capable Entities
- External attacker with reachability into the remote access segment
- Maintenance operator holding remote desktop credentials
Key Components
- ENCO Heating Control Server (scada_server, Level 2)
- District Heating HMI (hmi, Level 2)
- Plant Historian (historian, Level 2)
- Heating Plant PLC (plc, Level 1)
- Wireless Temperature Sensors (sensor, Level 0)
- Valve Actuators (actuator, Level 0)
- Remote Access Gateway (gateway, Level 3)
Trust Boundaries and Purdue Zones
- Level 3 to Level 2 via OPC UA
- Level 2 to Level 1 via Modbus TCP
- Level 1 to Level 0 via Modbus
- Level 4 to Level 3 via HTTPS
- Level 2 to Level 3 via OPC UA
Data Flows & Interactions
- ENCO Heating Control Server -> Heating Plant PLC via Modbus TCP (Level 2 to Level 1)
- Heating Plant PLC -> Valve Actuators via Modbus (Level 1 to Level 0)
- Wireless Temperature Sensors -> Heating Plant PLC via Modbus (Level 0 to Level 1)
- Remote Access Gateway -> ENCO Heating Control Server via OPC UA (Level 3 to Level 2)
Technologies and Protocols
- Modbus TCP on the supervisory-to-control segment
- OPC UA between the DMZ and the supervisory zone
Assets and Functions
- Heating Plant PLC regulates district heating water temperature setpoints
- ENCO Heating Control Server supervises substations for over 600 apartment buildings
Attack Entry Points
- Remote Access Gateway reachable from external networks
- Unauthenticated Modbus TCP service on the control segment
"""

_CATS = [
    "Spoofing", "Tampering", "Repudiation", "Information Disclosure",
    "Denial of Service", "Elevation of Privilege", "Lateral Movement",
]
_SCENARIOS = {
    "Spoofing": [
        "An attacker spoofs the HMI operator session against the ENCO heating control server, issuing setpoint writes that appear to originate from the plant control room.",
        "Forged Modbus TCP unit identifiers let an attacker masquerade as the Heating Plant PLC towards the supervisory layer.",
        "The remote access gateway accepts replayed authentication tokens, allowing impersonation of a maintenance operator.",
    ],
    "Tampering": [
        "Unauthenticated Modbus TCP write commands alter temperature setpoints on the Heating Plant PLC, degrading district heat delivery.",
        "An attacker modifies historian records to mask manipulated process values after a setpoint change.",
        "Firmware on the wireless temperature sensors is altered in transit over the unsegmented field network.",
    ],
    "Repudiation": [
        "Absent command logging on the ENCO server lets an operator deny having issued a valve shutdown sequence.",
        "Modbus TCP carries no origin accounting, so malicious writes to the PLC cannot be attributed.",
        "Gateway session records can be purged by anyone holding maintenance credentials, erasing traces of remote access.",
    ],
    "Information Disclosure": [
        "Cleartext Modbus TCP traffic between server and PLC exposes the full process image to a network observer.",
        "The historian exports substation telemetry for 600+ apartment buildings without access control.",
        "OPC UA endpoint metadata on the DMZ gateway reveals the internal control network layout.",
    ],
    "Denial of Service": [
        "Flooding the Modbus TCP command interface saturates the PLC scan cycle and stalls heat regulation.",
        "Malformed OPC UA requests crash the gateway, severing supervisory visibility of all substations.",
        "Targeted writes disable the circulation pumps, forcing a district-wide heating outage in winter conditions.",
    ],
    "Elevation of Privilege": [
        "Weak HMI authentication or session hijacking yields operator-level control of the heating control server.",
        "A compromised historian service account is reused to gain administrative access on the supervisory segment.",
        "Default credentials on the remote access gateway elevate an external foothold to control-network access.",
    ],
    "Lateral Movement": [
        "From the remote access gateway an attacker pivots into the supervisory zone and reaches the ENCO server.",
        "A compromised engineering workstation bridges the DMZ into the Level 2 segment over RDP.",
        "The flat field network lets an attacker hop from a wireless sensor to the PLC without traversing a boundary.",
    ],
}
threat_model = {
    "threat_model": [
        {"Threat Type": cat, "Scenario": s,
         "Potential Impact": "Loss or degradation of district heating delivery"}
        for cat in _CATS for s in _SCENARIOS[cat]
    ],
    "arch_suggestions": [
        "Authentication flows between the remote access gateway and the supervisory zone",
        "Network segmentation detail between Level 2 and the field network",
        "Safety system integration for over-temperature protection",
    ],
}


def tiny_png() -> bytes:
    """Minimal valid 1x1 grey PNG (placeholder DFD artefact)."""
    def chunk(tag, data):
        payload = tag + data
        return struct.pack(">I", len(data)) + payload + struct.pack(
            ">I", zlib.crc32(payload))
    ihdr = struct.pack(">IIBBBBB", 1, 1, 8, 0, 0, 0, 0)
    idat = zlib.compress(b"\x00\x80")
    return (b"\x89PNG\r\n\x1a\n" + chunk(b"IHDR", ihdr)
            + chunk(b"IDAT", idat) + chunk(b"IEND", b""))


def main():
    FIXDIR.mkdir(parents=True, exist_ok=True)
    (FIXDIR / "attack_tree.json").write_text(
        json.dumps(tree, indent=2) + "\n")
    (FIXDIR / "params.json").write_text(
        json.dumps(params, indent=2) + "\n")
    (FIXDIR / "narration.txt").write_text(NARRATION)
    (FIXDIR / "threat_model.json").write_text(
        json.dumps(threat_model, indent=2) + "\n")
    (FIXDIR / "dfd.png").write_bytes(tiny_png())
    print("x_h =", x_h, "a_link =", a_link, "g_link =", g_link)
    print("fixture written to", FIXDIR)


if __name__ == "__main__":
    main()
