use std::io::Write;

use super::{MonteCarloResult, ProfitTick, TickStats};

const BASE_HEADER: [&str; 5] = ["tick", "newly_exposed", "sharing", "removed", "cumulative_informed"];
const PROFIT_HEADER: [&str; 4] = ["engagement", "revenue", "cost", "profit"];

fn header(with_profit: bool) -> Vec<&'static str> {
    let mut h = BASE_HEADER.to_vec();
    if with_profit {
        h.extend(PROFIT_HEADER);
    }
    h
}

fn profit_cells(row: &mut Vec<String>, p: &ProfitTick) {
    row.extend([
        p.engagement.to_string(),
        p.revenue.to_string(),
        p.cost.to_string(),
        p.profit.to_string(),
    ]);
}

/// One row per tick of a single cascade; profit columns are appended when a
/// profit series is given.
pub fn write_tick_csv<W: Write>(
    out: W,
    stats: &[TickStats],
    profit: Option<&[ProfitTick]>,
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(profit.is_some()))?;
    for (i, s) in stats.iter().enumerate() {
        let mut row = vec![
            s.tick.to_string(),
            s.newly_exposed.to_string(),
            s.sharing.to_string(),
            s.removed_this_tick.to_string(),
            s.cumulative_informed.to_string(),
        ];
        if let Some(p) = profit.and_then(|p| p.get(i)) {
            profit_cells(&mut row, p);
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Same columns as [`write_tick_csv`], holding Monte Carlo means.
pub fn write_mean_csv<W: Write>(
    out: W,
    mc: &MonteCarloResult,
    profit: Option<&[ProfitTick]>,
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(profit.is_some()))?;
    for (i, a) in mc.per_tick.iter().enumerate() {
        let mut row = vec![
            a.tick.to_string(),
            a.newly_exposed.to_string(),
            a.sharing.to_string(),
            a.removed_this_tick.to_string(),
            a.cumulative_informed.mean.to_string(),
        ];
        if let Some(p) = profit.and_then(|p| p.get(i)) {
            profit_cells(&mut row, p);
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{profit_series, run_cascade, EngagementWeights, ProfitParams, PropagationParams, SocialGraph};
    use std::collections::BTreeSet;

    #[test]
    fn header_and_rows() {
        let g = SocialGraph::uniform(3, 0.0, vec![(0, 1), (1, 2)]).unwrap();
        let p = PropagationParams {
            base_share: 1.0,
            affinity_weight: 0.0,
            bot_share: 0.0,
            moderation_rate: 0.0,
            ticks: 2,
            seeds: BTreeSet::from([0]),
        };
        let r = run_cascade(&g, &p, 0);
        let mut buf = Vec::new();
        write_tick_csv(&mut buf, &r.per_tick, None).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "tick,newly_exposed,sharing,removed,cumulative_informed\n0,1,1,0,1\n1,1,1,0,2\n2,1,1,0,3\n"
        );

        let profit = ProfitParams {
            ad_rate: 0.5,
            moderation_cost_rate: 0.25,
            engagement_weights: EngagementWeights::default(),
        };
        let series = profit_series(&r.per_tick, &profit);
        let mut buf = Vec::new();
        write_tick_csv(&mut buf, &r.per_tick, Some(&series)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "tick,newly_exposed,sharing,removed,cumulative_informed,engagement,revenue,cost,profit");
        // tick 1: one exposure + one share = 4 engagement, one check.
        assert_eq!(lines[2], "1,1,1,0,2,4,2,0.25,1.75");
    }
}
