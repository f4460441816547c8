use std::fmt::Write as _;

use super::{round2, Instance, InstanceError, Node, NodeKind};

fn syntax(line: usize, msg: impl Into<String>) -> InstanceError {
    InstanceError::Syntax { line, msg: msg.into() }
}

fn parse_f64(tok: &str, line: usize, what: &str) -> Result<f64, InstanceError> {
    let v: f64 = tok
        .parse()
        .map_err(|_| syntax(line, format!("cannot parse {what} from '{tok}'")))?;
    if !v.is_finite() {
        return Err(syntax(line, format!("{what} is not finite")));
    }
    Ok(round2(v))
}

fn parse_opt<T: std::str::FromStr>(tok: &str, line: usize, what: &str) -> Result<Option<T>, InstanceError> {
    if tok == "-" {
        return Ok(None);
    }
    tok.parse()
        .map(Some)
        .map_err(|_| syntax(line, format!("cannot parse {what} from '{tok}'")))
}

/// Parses the native instance text format.
///
/// ```text
/// NAME <text>
/// VEHICLES <K>
/// CAPACITY <Q>
/// BATTERY <B>
/// RATE_G <g>
/// RATE_H <h>
/// SEED <s|->
/// RNG <id|->
/// NODES <count>
/// <id> <D|C|S|F> <x> <y> <q> <e> <l> <s> <charger_loc|-> <b|->
/// ```
///
/// Blank lines and lines starting with `#` are ignored. All numbers are
/// rounded to two decimals.
pub fn parse_instance(text: &str) -> Result<Instance, InstanceError> {
    let mut name = None;
    let mut vehicles = None;
    let mut capacity = None;
    let mut battery = None;
    let mut rate_g = None;
    let mut rate_h = None;
    let mut seed = None;
    let mut rng = None;
    let mut expected_nodes: Option<usize> = None;
    let mut nodes = Vec::new();
    let mut in_nodes = false;
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        last_line = line;
        let content = raw.trim();
        if content.is_empty() || content.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = content.split_whitespace().collect();
        if in_nodes {
            if toks.len() != 10 {
                return Err(syntax(
                    line,
                    format!("node record needs 10 fields, found {}", toks.len()),
                ));
            }
            let id: usize = toks[0]
                .parse()
                .map_err(|_| syntax(line, format!("bad node id '{}'", toks[0])))?;
            let kind =
                NodeKind::from_code(toks[1]).ok_or_else(|| syntax(line, format!("unknown node kind '{}'", toks[1])))?;
            let mut node = Node::new(id, kind, parse_f64(toks[2], line, "x")?, parse_f64(toks[3], line, "y")?);
            node.demand = parse_f64(toks[4], line, "demand")?;
            node.tw_open = parse_f64(toks[5], line, "tw_open")?;
            node.tw_close = parse_f64(toks[6], line, "tw_close")?;
            node.service_time = parse_f64(toks[7], line, "service_time")?;
            node.charger_location = parse_opt(toks[8], line, "charger location")?;
            node.slot_capacity = parse_opt(toks[9], line, "slot capacity")?;
            nodes.push(node);
            continue;
        }
        let value = |i: usize| -> Result<&str, InstanceError> {
            toks.get(i)
                .copied()
                .ok_or_else(|| syntax(line, format!("missing value for {}", toks[0])))
        };
        match toks[0] {
            "NAME" => name = Some(toks[1..].join(" ")),
            "VEHICLES" => {
                vehicles = Some(
                    value(1)?
                        .parse::<usize>()
                        .map_err(|_| syntax(line, "VEHICLES must be a non-negative integer"))?,
                )
            }
            "CAPACITY" => capacity = Some(parse_f64(value(1)?, line, "CAPACITY")?),
            "BATTERY" => battery = Some(parse_f64(value(1)?, line, "BATTERY")?),
            "RATE_G" => rate_g = Some(parse_f64(value(1)?, line, "RATE_G")?),
            "RATE_H" => rate_h = Some(parse_f64(value(1)?, line, "RATE_H")?),
            "SEED" => seed = parse_opt::<u64>(value(1)?, line, "SEED")?,
            "RNG" => rng = parse_opt::<String>(value(1)?, line, "RNG")?,
            "NODES" => {
                expected_nodes = Some(
                    value(1)?
                        .parse()
                        .map_err(|_| syntax(line, "NODES must be an integer"))?,
                );
                in_nodes = true;
            }
            other => return Err(syntax(line, format!("unknown header '{other}'"))),
        }
    }

    let missing = |what: &str| syntax(last_line, format!("missing {what} header"));
    let inst = Instance {
        name: name.ok_or_else(|| missing("NAME"))?,
        vehicles: vehicles.ok_or_else(|| missing("VEHICLES"))?,
        capacity: capacity.ok_or_else(|| missing("CAPACITY"))?,
        battery: battery.ok_or_else(|| missing("BATTERY"))?,
        recharge_rate: rate_g.ok_or_else(|| missing("RATE_G"))?,
        consumption_rate: rate_h.ok_or_else(|| missing("RATE_H"))?,
        seed,
        rng,
        nodes,
    };
    let expected = expected_nodes.ok_or_else(|| missing("NODES"))?;
    if expected != inst.nodes.len() {
        return Err(syntax(
            last_line,
            format!("NODES declares {expected} records, found {}", inst.nodes.len()),
        ));
    }
    inst.check()?;
    Ok(inst)
}

fn opt<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "-".to_string(), |x| x.to_string())
}

/// Writes the native instance text format. Output is byte-stable for equal
/// instances.
pub fn write_instance(inst: &Instance) -> String {
    let mut out = String::new();
    writeln!(out, "NAME {}", inst.name).unwrap();
    writeln!(out, "VEHICLES {}", inst.vehicles).unwrap();
    writeln!(out, "CAPACITY {:.2}", inst.capacity).unwrap();
    writeln!(out, "BATTERY {:.2}", inst.battery).unwrap();
    writeln!(out, "RATE_G {:.2}", inst.recharge_rate).unwrap();
    writeln!(out, "RATE_H {:.2}", inst.consumption_rate).unwrap();
    writeln!(out, "SEED {}", opt(&inst.seed)).unwrap();
    writeln!(out, "RNG {}", opt(&inst.rng)).unwrap();
    writeln!(out, "NODES {}", inst.nodes.len()).unwrap();
    for n in &inst.nodes {
        writeln!(
            out,
            "{} {} {:.2} {:.2} {:.2} {:.2} {:.2} {:.2} {} {}",
            n.id,
            n.kind.code(),
            n.x,
            n.y,
            n.demand,
            n.tw_open,
            n.tw_close,
            n.service_time,
            opt(&n.charger_location),
            opt(&n.slot_capacity)
        )
        .unwrap();
    }
    out
}

/// Parses an EVRPTW file in the Schneider et al. layout into a base instance
/// (depot, customers and stations). Stations located at the depot are kept.
///
/// The file's "inverse refueling rate" (time per energy unit) is converted
/// into a recharge rate. `max_customers` keeps only the first customers in
/// file order; `vehicles` defaults to the number of kept customers.
pub fn parse_schneider(
    text: &str,
    name: &str,
    max_customers: Option<usize>,
    vehicles: Option<usize>,
) -> Result<Instance, InstanceError> {
    let mut depot: Option<Node> = None;
    let mut stations = Vec::new();
    let mut customers = Vec::new();
    let mut battery = None;
    let mut capacity = None;
    let mut consumption = None;
    let mut inverse_rate = None;

    let slash_value = |line: usize, s: &str| -> Result<f64, InstanceError> {
        let start = s.find('/').ok_or_else(|| syntax(line, "expected /value/"))?;
        let rest = &s[start + 1..];
        let end = rest.find('/').ok_or_else(|| syntax(line, "expected /value/"))?;
        parse_f64(rest[..end].trim(), line, "parameter")
    };

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.trim();
        if content.is_empty() || content.starts_with("StringID") {
            continue;
        }
        if content.contains('/') {
            let lower = content.to_ascii_lowercase();
            if lower.contains("fuel tank capacity") {
                battery = Some(slash_value(line, content)?);
            } else if lower.contains("load capacity") {
                capacity = Some(slash_value(line, content)?);
            } else if lower.contains("fuel consumption rate") {
                consumption = Some(slash_value(line, content)?);
            } else if lower.contains("inverse refueling rate") {
                inverse_rate = Some(slash_value(line, content)?);
            }
            continue;
        }
        let toks: Vec<&str> = content.split_whitespace().collect();
        if toks.len() < 8 {
            return Err(syntax(line, "node line needs 8 fields"));
        }
        let mut n = Node::new(
            0,
            NodeKind::Customer,
            parse_f64(toks[2], line, "x")?,
            parse_f64(toks[3], line, "y")?,
        );
        n.demand = parse_f64(toks[4], line, "demand")?;
        n.tw_open = parse_f64(toks[5], line, "ReadyTime")?;
        n.tw_close = parse_f64(toks[6], line, "DueDate")?;
        n.service_time = parse_f64(toks[7], line, "ServiceTime")?;
        match toks[1] {
            "d" => {
                n.kind = NodeKind::Depot;
                depot = Some(n);
            }
            "f" => {
                n.kind = NodeKind::Station;
                n.demand = 0.0;
                n.service_time = 0.0;
                stations.push(n);
            }
            "c" => customers.push(n),
            other => return Err(syntax(line, format!("unknown node type '{other}'"))),
        }
    }
    let depot = depot.ok_or_else(|| syntax(0, "no depot record"))?;
    if let Some(k) = max_customers {
        customers.truncate(k);
    }
    let inverse_rate = inverse_rate.ok_or_else(|| syntax(0, "missing inverse refueling rate"))?;
    if inverse_rate <= 0.0 {
        return Err(InstanceError::Invalid("inverse refueling rate must be positive".into()));
    }
    let horizon = depot.tw_close;
    let mut nodes = vec![depot];
    let num_customers = customers.len();
    nodes.extend(customers);
    for mut s in stations {
        s.tw_open = 0.0;
        s.tw_close = horizon;
        nodes.push(s);
    }
    for (i, n) in nodes.iter_mut().enumerate() {
        n.id = i;
    }
    let inst = Instance {
        name: name.to_string(),
        vehicles: vehicles.unwrap_or(num_customers),
        capacity: capacity.ok_or_else(|| syntax(0, "missing load capacity"))?,
        battery: battery.ok_or_else(|| syntax(0, "missing fuel tank capacity"))?,
        recharge_rate: round2(1.0 / inverse_rate),
        consumption_rate: consumption.unwrap_or(1.0),
        seed: None,
        rng: None,
        nodes,
    };
    inst.check()?;
    Ok(inst)
}

/// Parses a solution file: one route per line as whitespace-separated node
/// ids, blank lines and `#` comments ignored.
pub fn parse_solution(text: &str) -> Result<Vec<Vec<usize>>, InstanceError> {
    let mut routes = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let route = content
            .split_whitespace()
            .map(|t| {
                t.parse::<usize>()
                    .map_err(|_| syntax(idx + 1, format!("cannot parse node id from '{t}'")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        routes.push(route);
    }
    Ok(routes)
}

pub fn write_solution(routes: &[Vec<usize>]) -> String {
    let mut out = String::new();
    for r in routes {
        let ids: Vec<String> = r.iter().map(|i| i.to_string()).collect();
        writeln!(out, "{}", ids.join(" ")).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "NAME t\nVEHICLES 2\nCAPACITY 10\nBATTERY 80\nRATE_G 1\nRATE_H 1\nSEED -\nRNG -\n";

    fn with_nodes(records: &[&str]) -> String {
        format!("{HEADER}NODES {}\n{}\n", records.len(), records.join("\n"))
    }

    #[test]
    fn minimal_file_one_customer() {
        let text = with_nodes(&["0 D 0 0 0 0 100 0 - -", "1 C 3 4 1 0 100 1 - -"]);
        let inst = parse_instance(&text).unwrap();
        assert_eq!(inst.num_customers(), 1);
        assert_eq!(inst.slots().count(), 0);
        assert_eq!(inst.distance(0, 1), 5.0);
    }

    #[test]
    fn touching_slots_accepted() {
        let text = with_nodes(&[
            "0 D 0 0 0 0 100 0 - -",
            "1 F 5 5 0 0 50 0 7 1",
            "2 F 5 5 0 50 100 0 7 1",
        ]);
        assert!(parse_instance(&text).is_ok());
    }

    #[test]
    fn overlapping_slots_rejected() {
        let text = with_nodes(&[
            "0 D 0 0 0 0 100 0 - -",
            "1 F 5 5 0 0 50 0 7 1",
            "2 F 5 5 0 40 100 0 7 1",
        ]);
        let err = parse_instance(&text).unwrap_err();
        assert!(err.to_string().contains("overlapping slots 1 and 2"), "{err}");
    }

    #[test]
    fn syntax_error_reports_line() {
        let text = with_nodes(&["0 D 0 0 0 0 100 0 - -", "1 C 3 four 1 0 100 1 - -"]);
        match parse_instance(&text).unwrap_err() {
            InstanceError::Syntax { line, .. } => assert_eq!(line, 11),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn values_rounded_on_load() {
        let text = with_nodes(&["0 D 0 0 0 0 100 0 - -", "1 C 3.14159 4 1 0 100 1 - -"]);
        let inst = parse_instance(&text).unwrap();
        assert_eq!(inst.nodes[1].x, 3.14);
    }

    #[test]
    fn write_is_stable() {
        let text = with_nodes(&["0 D 0 0 0 0 100 0 - -", "1 C 3 4 1 0 100 1 - -"]);
        let inst = parse_instance(&text).unwrap();
        let once = write_instance(&inst);
        let twice = write_instance(&parse_instance(&once).unwrap());
        assert_eq!(once, twice);
    }

    #[test]
    fn schneider_layout() {
        let text = "StringID   Type       x          y          demand     ReadyTime  DueDate    ServiceTime
D0         d          40.0       50.0       0.0        0.0        1236.0     0.0
S0         f          40.0       50.0       0.0        0.0        1236.0     0.0
S15        f          39.0       26.0       0.0        0.0        1236.0     0.0
C20        c          30.0       50.0       10.0       0.0        1136.0     90.0
C24        c          25.0       50.0       10.0       0.0        1131.0     90.0

Q Vehicle fuel tank capacity /79.69/
C Vehicle load capacity /200.0/
r fuel consumption rate /1.0/
g inverse refueling rate /3.39/
v average Velocity /1.0/
";
        let inst = parse_schneider(text, "c101", Some(1), None).unwrap();
        assert_eq!(inst.num_customers(), 1);
        assert_eq!(inst.stations().count(), 2);
        assert_eq!(inst.battery, 79.69);
        assert_eq!(inst.recharge_rate, 0.29);
        assert_eq!(inst.vehicles, 1);
        assert_eq!(inst.nodes[1].demand, 10.0);
    }

    #[test]
    fn solution_round_trip() {
        let routes = vec![vec![0, 1, 3, 4], vec![0, 2, 4]];
        let text = write_solution(&routes);
        assert_eq!(parse_solution(&text).unwrap(), routes);
        assert_eq!(parse_solution("# c\n\n0 1 4 # tail\n").unwrap(), vec![vec![0, 1, 4]]);
        assert!(parse_solution("0 x 4").is_err());
    }
}
