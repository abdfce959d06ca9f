package shop;

public class PercentOff implements DiscountPolicy {
    private final int percent;

    public PercentOff(int percent) {
        this.percent = percent;
    }

    public long apply(long amountCents) {
        return amountCents - amountCents * percent / 100;
    }
}
