//! Domain, field and background descriptions given as short strings.

use std::fs::File;
use std::io::BufReader;

use conical_liouville::cosmic::{bubble_family, BubbleKind};
use conical_liouville::domain::{polygon_sides, PlanarDomain, Point};
use conical_liouville::grid::{Field2d, ScalarField};
use conical_liouville::sampling::RandomSubsolution;
use conical_liouville::weight::Coefficient;

use crate::error::{parse_err, CliResult};

/// A field that can be evaluated across threads.
pub type FieldBox = Box<dyn Field2d + Send + Sync>;

/// Parsed field; `is_bubble` marks the closed-form equality family.
pub struct FieldSpec {
    pub field: FieldBox,
    pub is_bubble: bool,
}

fn numbers(s: &str, expected: usize, what: &str) -> CliResult<Vec<f64>> {
    let vals: Result<Vec<f64>, _> = s.split(',').map(|t| t.trim().parse::<f64>()).collect();
    match vals {
        Ok(v) if v.len() == expected => Ok(v),
        _ => parse_err(format!("{what} expects {expected} comma-separated numbers, got '{s}'")),
    }
}

fn split_center(s: &str) -> CliResult<(&str, Point)> {
    match s.split_once('@') {
        None => Ok((s, [0.0, 0.0])),
        Some((body, "origin")) => Ok((body, [0.0, 0.0])),
        Some((body, c)) => {
            let v = numbers(c, 2, "center")?;
            Ok((body, [v[0], v[1]]))
        }
    }
}

fn parse_loop(s: &str) -> CliResult<Vec<Point>> {
    s.split(';')
        .map(|pair| numbers(pair, 2, "polygon vertex").map(|v| [v[0], v[1]]))
        .collect()
}

/// Parsed domain and whether it is a disk centered at the origin.
pub struct DomainSpec {
    pub domain: PlanarDomain,
    pub centered_disk: bool,
    pub is_disk: bool,
}

pub fn parse_domain(text: &str, n: usize) -> CliResult<DomainSpec> {
    let Some((kind, rest)) = text.split_once(':') else {
        return parse_err(format!("domain '{text}' must look like kind:params"));
    };
    let sides = polygon_sides(n);
    let (domain, centered_disk, is_disk) = match kind {
        "disk" => {
            let (body, c) = split_center(rest)?;
            let r = numbers(body, 1, "disk")?[0];
            (PlanarDomain::disk(c, r, sides)?, c == [0.0, 0.0], true)
        }
        "annulus" => {
            let (body, c) = split_center(rest)?;
            let v = numbers(body, 2, "annulus")?;
            (PlanarDomain::annulus(c, v[0], v[1], sides)?, false, false)
        }
        "square" => {
            let (body, c) = split_center(rest)?;
            let s = numbers(body, 1, "square")?[0];
            (PlanarDomain::square(c, s)?, false, false)
        }
        "poly" => {
            let mut loops = rest.split('|');
            let outer = parse_loop(loops.next().unwrap_or(""))?;
            let holes = loops.map(parse_loop).collect::<CliResult<Vec<_>>>()?;
            (PlanarDomain::polygon(outer, holes)?, false, false)
        }
        other => return parse_err(format!("unknown domain kind '{other}'")),
    };
    Ok(DomainSpec {
        domain,
        centered_disk,
        is_disk,
    })
}

/// Largest distance from the origin to a domain vertex.
fn reach(domain: &PlanarDomain) -> f64 {
    domain.loops().flatten().map(|p| p[0].hypot(p[1])).fold(0.0, f64::max)
}

pub fn parse_field(text: &str, alpha: f64, seed: u64, domain: &PlanarDomain) -> CliResult<FieldSpec> {
    let (kind, rest) = text.split_once(':').unwrap_or((text, ""));
    let plain = |field: FieldBox| FieldSpec {
        field,
        is_bubble: false,
    };
    Ok(match kind {
        "zero" => plain(Box::new(|_: f64, _: f64| 0.0)),
        "const" => {
            let c = numbers(rest, 1, "const")?[0];
            plain(Box::new(move |_: f64, _: f64| c))
        }
        "quad" => {
            let c = numbers(rest, 1, "quad")?[0];
            plain(Box::new(move |x: f64, y: f64| c * (x * x + y * y)))
        }
        "bubble" => {
            let lambda = numbers(rest, 1, "bubble")?[0];
            let kind = if alpha == 0.0 {
                BubbleKind::Flat
            } else {
                BubbleKind::Singular { alpha }
            };
            FieldSpec {
                field: Box::new(bubble_family(kind, lambda)?),
                is_bubble: true,
            }
        }
        "random" => plain(Box::new(RandomSubsolution::sample(seed, alpha, reach(domain))?)),
        "file" => {
            if rest.is_empty() {
                return parse_err("file field needs a path");
            }
            let f = ScalarField::read_csv(BufReader::new(File::open(rest)?))?;
            plain(Box::new(f))
        }
        other => return parse_err(format!("unknown field kind '{other}'")),
    })
}

/// Subharmonic background `g`.
pub fn parse_background(text: &str) -> CliResult<Coefficient> {
    let (kind, rest) = text.split_once(':').unwrap_or((text, ""));
    Ok(match kind {
        "zero" => Coefficient::Constant(0.0),
        "linear" => {
            let v = numbers(rest, 2, "linear")?;
            let (a, b) = (v[0], v[1]);
            Coefficient::function(move |x, y| a * x + b * y)
        }
        "quad" => {
            let c = numbers(rest, 1, "quad")?[0];
            if c < 0.0 {
                return parse_err("quad background needs c >= 0 to be subharmonic");
            }
            Coefficient::function(move |x, y| c * (x * x + y * y))
        }
        other => return parse_err(format!("unknown background kind '{other}'")),
    })
}
