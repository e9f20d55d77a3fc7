use chrono::{Datelike, NaiveDate};
use proptest::prelude::*;

use implied_corr::correlation::{
    aggregate_var, build_surface, grid, implied_correlation, paper_levels,
};
use implied_corr::data::{
    align, business_days, portfolio_returns, resample_weekly, to_returns, Frequency, PortfolioSpec,
    Position, PriceObservation, PriceSeries, ReturnSeries,
};
use implied_corr::var::{historical_var, ProbabilityLevel, VarEstimate, VarMethod};

fn start() -> NaiveDate {
    NaiveDate::from_ymd_opt(2001, 3, 5).unwrap()
}

/// A price series on a random subset of business days.
fn price_series(id: &'static str) -> impl Strategy<Value = PriceSeries> {
    prop::collection::vec((any::<bool>(), 1.0f64..500.0), 2..120).prop_filter_map(
        "need at least one kept date",
        move |rows| {
            let dates = business_days(start(), rows.len());
            let obs: Vec<_> = dates
                .into_iter()
                .zip(rows)
                .filter(|(_, (keep, _))| *keep)
                .map(|(date, (_, close))| PriceObservation { date, close })
                .collect();
            PriceSeries::new(id, obs).ok()
        },
    )
}

fn returns(min: usize, max: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-0.2f64..0.2, min..max)
}

fn position() -> impl Strategy<Value = Position> {
    prop_oneof![Just(Position::Long), Just(Position::Short)]
}

fn series(values: Vec<f64>) -> ReturnSeries {
    ReturnSeries::from_values("r", Frequency::Daily, values).unwrap()
}

fn estimate(value: f64) -> VarEstimate {
    VarEstimate {
        value,
        level: ProbabilityLevel::new(0.99).unwrap(),
        position: Position::Long,
        method: VarMethod::PortfolioQuantile,
        n_obs: 500,
    }
}

proptest! {
    #[test]
    fn align_is_idempotent(a in price_series("a"), b in price_series("b")) {
        if let Ok((a1, b1)) = align(&a, &b) {
            let (a2, b2) = align(&a1, &b1).unwrap();
            prop_assert_eq!(&a1, &a2);
            prop_assert_eq!(&b1, &b2);
            prop_assert!(a1.dates().eq(b1.dates()));
        }
    }

    #[test]
    fn returns_are_one_shorter(p in price_series("a")) {
        match to_returns(&p) {
            Ok(r) => prop_assert_eq!(r.len(), p.len() - 1),
            Err(_) => prop_assert!(p.len() < 2),
        }
    }

    #[test]
    fn weekly_never_exceeds_weeks_spanned(p in price_series("a")) {
        if p.len() >= 2 {
            let w = resample_weekly(&p).unwrap();
            let first = p.observations()[0].date;
            let last = p.observations()[p.len() - 1].date;
            let weeks = (last.signed_duration_since(first).num_days() / 7 + 2) as usize;
            prop_assert!(w.len() <= weeks);
            let distinct: std::collections::BTreeSet<_> =
                p.dates().map(|d| { let w = d.iso_week(); (w.year(), w.week()) }).collect();
            prop_assert_eq!(w.len(), distinct.len());
        }
    }

    #[test]
    fn portfolio_returns_are_linear(
        pairs in prop::collection::vec((-0.1f64..0.1, -0.1f64..0.1), 1..60),
        w1 in 0.01f64..0.99,
        c in 0.1f64..10.0,
    ) {
        let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let (r1, r2) = (series(a), series(b));
        let spec = PortfolioSpec::new(w1, 1.0 - w1, Position::Long).unwrap();
        let base = portfolio_returns(&r1, &r2, &spec).unwrap();
        let scaled = portfolio_returns(
            &r1.map_values(|v| c * v).unwrap(),
            &r2.map_values(|v| c * v).unwrap(),
            &spec,
        ).unwrap();
        for (s, b) in scaled.values().iter().zip(base.values()) {
            prop_assert!((s - c * b).abs() <= 1e-12 * c.max(1.0));
        }
    }

    #[test]
    fn var_scales_with_positive_factor(
        values in returns(20, 300),
        p in 0.8f64..0.95,
        c in 0.01f64..100.0,
        pos in position(),
    ) {
        let level = ProbabilityLevel::new(p).unwrap();
        let r = series(values);
        let base = historical_var(&r, level, pos).unwrap().value;
        let scaled = historical_var(&r.map_values(|v| c * v).unwrap(), level, pos).unwrap().value;
        prop_assert!((scaled - c * base).abs() <= 1e-12 * c.max(1.0));
    }

    #[test]
    fn negating_returns_swaps_positions(values in returns(1, 400), p in 0.5f64..0.999) {
        let level = ProbabilityLevel::new(p).unwrap();
        let r = series(values);
        let neg = r.map_values(|v| -v).unwrap();
        match (historical_var(&r, level, Position::Long), historical_var(&neg, level, Position::Short)) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a.value, b.value),
            (Err(_), Err(_)) => {}
            other => prop_assert!(false, "one side failed: {:?}", other),
        }
    }

    #[test]
    fn var_is_monotone_in_p_and_non_negative(
        values in returns(50, 400),
        p1 in 0.5f64..0.97,
        gap in 0.0f64..0.02,
        pos in position(),
    ) {
        let r = series(values);
        let lo = historical_var(&r, ProbabilityLevel::new(p1).unwrap(), pos).unwrap().value;
        let hi = historical_var(&r, ProbabilityLevel::new(p1 + gap).unwrap(), pos).unwrap().value;
        prop_assert!(lo >= 0.0);
        prop_assert!(hi >= lo);
    }

    #[test]
    fn implied_correlation_inverts_aggregation(
        rho in -1.0f64..=1.0,
        w1 in 0.01f64..0.99,
        v1 in 1e-3f64..1.0,
        v2 in 1e-3f64..1.0,
    ) {
        let spec = PortfolioSpec::new(w1, 1.0 - w1, Position::Long).unwrap();
        let (e1, e2) = (estimate(v1), estimate(v2));
        let agg = aggregate_var(&e1, &e2, &spec, rho).unwrap();
        let back = implied_correlation(&agg, &e1, &e2, &spec).unwrap();
        // rounding of the square root costs eps * v_agg^2 / (2 w1 w2 v1 v2)
        let a = w1 * v1;
        let b = (1.0 - w1) * v2;
        let bound = 8.0 * f64::EPSILON * (a * a + b * b) / (2.0 * a * b) + 1e-15;
        prop_assert!((back.rho - rho).abs() <= bound, "rho {} back {} bound {}", rho, back.rho, bound);
    }

    #[test]
    fn comonotonic_pairs_imply_one(
        values in returns(600, 1200),
        scale in 0.1f64..10.0,
        w1 in 0.05f64..0.95,
    ) {
        let r1 = series(values);
        let r2 = r1.map_values(|v| scale * v).unwrap();
        let g = grid(&paper_levels(Frequency::Daily)[..4], &[(w1, 1.0 - w1)], &Position::BOTH).unwrap();
        match build_surface(&r1, &r2, Frequency::Daily, &g) {
            Ok(s) => for pt in &s.points {
                prop_assert!((pt.rho - 1.0).abs() < 1e-9, "rho {}", pt.rho);
            },
            // a tail quantile on the wrong side of zero floors the VaR at 0
            Err(e) => prop_assert!(e.to_string().contains("degenerate"), "{}", e),
        }
    }

    #[test]
    fn swapping_assets_and_weights_keeps_rho(
        pairs in prop::collection::vec((-0.1f64..0.1, -0.1f64..0.1), 300..700),
        w1 in 0.05f64..0.95,
    ) {
        let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let (r1, r2) = (series(a), series(b));
        let levels = [ProbabilityLevel::new(0.9).unwrap(), ProbabilityLevel::new(0.98).unwrap()];
        let g = grid(&levels, &[(w1, 1.0 - w1)], &Position::BOTH).unwrap();
        let swapped: Vec<_> = g.iter().map(|pt| implied_corr::correlation::GridPoint {
            level: pt.level,
            spec: pt.spec.swapped(),
        }).collect();
        let s = build_surface(&r1, &r2, Frequency::Daily, &g);
        let t = build_surface(&r2, &r1, Frequency::Daily, &swapped);
        if let (Ok(s), Ok(t)) = (s, t) {
            for (x, y) in s.points.iter().zip(&t.points) {
                prop_assert!((x.rho - y.rho).abs() <= 1e-12 * x.rho.abs().max(1.0));
            }
        }
    }
}
