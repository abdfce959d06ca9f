package shop;

public interface DiscountPolicy {
    long apply(long amountCents);
}
